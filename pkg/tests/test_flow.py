# Test Strategy
# --------------------------------------------------------
# step policy:      validation, dict round trip
# velocity:         no constraints, stationary point, endpoints, pairing with c0
# cfl bound:        identity Gram, doubling of sigma_min^2 + eps^2, bad input
# curvature:        quadratic toy, constant objective, zero direction
# run:              K = 0, eps = 0, eps > 0, fixed vs halving, rejections, step underflow,
#                   factorisation failure, non-finite objective, cfl policy
# log:              csv columns, json, table, drift report, drift bound and per-constraint sharp bound

import json
import pytest
import numpy as np
import pandas as pd
from gramflow.model import QuantumSystem, TimeGrid, ControlField
from gramflow.constraints import Constraint, ConstraintSet
from gramflow.gram import assemble, regularize_and_diagnose
from gramflow.numkit import trapezoid
from gramflow.experiments import QuadraticObjective
from gramflow.flow import *


def _run(problem, **kwargs):
    return run(problem.objective, problem.constraints, problem.envelope, problem.field, **kwargs)


class BlowUpObjective(QuadraticObjective):
    """quadratic objective that turns NaN once the field leaves a small ball"""

    def value(self, field):
        if np.max(np.abs(field.samples)) > 0.1:
            return np.nan
        return super().value(field)


#### step policy ####

@pytest.mark.parametrize("kwargs", [
    {'kind': 'newton'},
    {'kind': 'fixed', 'ds': 0.0},
    {'kind': 'halving', 'ds': 1.0, 'factor': 1.0},
    {'kind': 'halving', 'ds': 1.0, 'min_ds': -1.0},
    {'kind': 'cfl', 'alpha': 2.0},
    {'kind': 'cfl', 'curvature': -1.0},
    {'kind': 'cfl', 'safety': 0.5},
    ])
def test_policy_validation(kwargs):
    with pytest.raises(ValueError):
        StepPolicy(**kwargs)


@pytest.mark.parametrize("policy", [StepPolicy.fixed(0.1), StepPolicy.halving(1e-3, factor = 0.5),
                                    StepPolicy.cfl(alpha = 1.5, curvature = 2.0)])
def test_policy_round_trip(policy):
    assert StepPolicy.from_dict(policy.to_dict()) == policy


def test_policy_defaults():
    assert StepPolicy().kind == 'halving'
    assert StepPolicy(kind = 'cfl').ds == np.inf
    assert StepPolicy.cfl().alpha == 1.9


#### velocity ####

def test_velocity_without_constraints(synthetic):
    field = synthetic.field
    c0 = synthetic.objective.gradient(field)
    gram = regularize_and_diagnose(assemble(synthetic.envelope, [c0]), 0.0)
    v = velocity(field, synthetic.envelope, gram, [c0])
    assert np.allclose(v, synthetic.envelope.samples * c0, rtol = 1e-12, atol = 1e-15)


def test_velocity_at_stationary_point(synthetic):
    n = synthetic.field.grid.n_points
    gradients = [np.zeros(n), np.ones(n)]
    gram = regularize_and_diagnose(assemble(synthetic.envelope, gradients), 0.0)
    assert np.all(velocity(synthetic.field, synthetic.envelope, gram, gradients) == 0.0)


@pytest.mark.parametrize("eps", [0.0, 1e-2, 1.0])
def test_velocity_pairing(synthetic, eps):
    field = synthetic.field
    c0 = synthetic.objective.gradient(field)
    gradients = [c0] + synthetic.constraints.gradients(field)
    gram = regularize_and_diagnose(assemble(synthetic.envelope, gradients), eps)
    v = velocity(field, synthetic.envelope, gram, gradients)
    assert v[0] == 0.0 and v[-1] == 0.0
    assert abs(trapezoid(c0 * v, field.grid.dt) - gram.dJ_firstorder) <= 1e-10 * gram.g0
    for m, eta in enumerate(gradients[1:]):
        assert abs(trapezoid(eta * v, field.grid.dt) - gram.drift_rate[m]) <= 1e-12 * max(1.0, gram.g0)


#### cfl bound ####

def test_cfl_bound_identity():
    gram = regularize_and_diagnose(np.eye(2), 0.0)
    assert np.isclose(cfl_step_bound(1.0, gram, alpha = 1.0), 1.0)


def test_cfl_bound_scales_with_sigma_min():
    gamma = np.diag([1.0, 0.1])
    bare = cfl_step_bound(1.0, regularize_and_diagnose(gamma, 0.0))
    shifted = cfl_step_bound(1.0, regularize_and_diagnose(gamma, np.sqrt(0.1)))
    assert np.isclose(shifted / bare, 2.0, rtol = 1e-12)


def test_cfl_bound_at_stationary_point():
    assert cfl_step_bound(1.0, regularize_and_diagnose(np.diag([0.0, 1.0]), 0.0)) == np.inf


@pytest.mark.parametrize("G, alpha", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, 2.0)])
def test_cfl_bound_rejects_bad_input(G, alpha):
    with pytest.raises(ValueError):
        cfl_step_bound(G, regularize_and_diagnose(np.eye(2), 0.0), alpha = alpha)


#### curvature ####

def test_curvature_of_quadratic(quadratic, rng):
    grid = quadratic.field.grid
    objective = QuadraticObjective(ControlField(grid, np.zeros(grid.n_points)), curvature = 1.0)
    field = ControlField(grid, np.sin(grid.times))
    G = estimate_curvature(objective, field, rng.standard_normal(grid.n_points), safety = 1.0)
    assert np.isclose(G, 1.0, rtol = 1e-6)
    G5 = estimate_curvature(objective, field, rng.standard_normal(grid.n_points))
    assert np.isclose(G5, 5.0, rtol = 1e-6)


def test_curvature_of_constant_objective(rng):
    system = QuantumSystem(H0 = np.diag([-0.5, 0.5]), mu = np.zeros((2, 2)), psi0 = [1.0, 0.0], psif = [0.0, 1.0])
    grid = TimeGrid(0.0, 5.0, 51)
    field = ControlField(grid, np.ones(51))
    assert estimate_curvature(system, field, rng.standard_normal(51)) <= 1e-10


def test_curvature_rejects_zero_direction(quadratic):
    with pytest.raises(ValueError):
        estimate_curvature(quadratic.objective, quadratic.field, np.zeros(quadratic.field.grid.n_points))


#### runs ####

def test_run_without_iterations(synthetic):
    log = _run(synthetic, eps = 0.0, policy = StepPolicy.halving(1e-2), max_iter = 0)
    assert len(log.records) == 1
    assert log.n_iterations == 0
    assert log.termination == 'max_iterations'
    assert np.array_equal(log.terminal_field.samples, synthetic.field.samples)
    assert log.records[0].J == synthetic.objective.value(synthetic.field)


def test_run_without_regularisation(synthetic):
    log = _run(synthetic, eps = 0.0, policy = StepPolicy.halving(1e-2), max_iter = 10, tolerance = None)
    assert log.termination == 'max_iterations'
    assert log.n_iterations == 10
    assert log.n_rejections == 0
    J = np.array([r.J for r in log.accepted_records])
    assert np.all(np.diff(J) > 0.0)
    assert np.all(log.drift_pred == 0.0)
    assert log.drift_bound == 0.0
    report = drift_report(log, synthetic.constraints)
    assert np.max(np.abs(report['measured'])) <= 1e-12
    assert np.allclose(log.step_sizes, 1e-2)


@pytest.mark.parametrize("eps", [1e-1, 1.0])
def test_affine_drift_prediction_is_exact(synthetic, eps):
    log = _run(synthetic, eps = eps, policy = StepPolicy.fixed(1e-2), max_iter = 10, tolerance = None)
    report = drift_report(log, synthetic.constraints)
    assert np.max(np.abs(report['predicted'])) > 0.0
    assert np.max(np.abs(report['residual'])) <= 1e-12
    assert np.all(np.abs(log.drift_pred) <= log.drift_bound * (1.0 + 1e-12))


@pytest.mark.parametrize("eps, quadrature", [(1e-1, 'left'), (1.0, 'left'), (1.0, 'trapezoid')])
def test_sharp_drift_bound(synthetic_fluence, eps, quadrature):
    log = _run(synthetic_fluence, eps = eps, policy = StepPolicy.fixed(1e-2), max_iter = 10, tolerance = None,
               drift_quadrature = quadrature)
    report = drift_report(log, synthetic_fluence.constraints)
    assert np.all(report['sharp_bound'] > 0.0)
    assert np.all(np.abs(report['predicted']) <= report['sharp_bound'] * (1.0 + 1e-12))
    assert np.allclose(log.to_dict()['sharp_bound'], report['sharp_bound'].values)


def test_rho_stays_in_range(synthetic):
    log = _run(synthetic, eps = 1.0, policy = StepPolicy.fixed(1e-2), max_iter = 5, tolerance = None)
    for r in log.accepted_records:
        assert 0.0 <= r.rho <= 1.0
        assert r.dJ_first >= 0.0
        assert abs(r.pairing - r.dJ_first) <= 1e-10 * r.g0


def test_fixed_and_halving_agree_without_rejections(synthetic):
    fixed = _run(synthetic, eps = 1e-2, policy = StepPolicy.fixed(1e-3), max_iter = 10, tolerance = None)
    halving = _run(synthetic, eps = 1e-2, policy = StepPolicy.halving(1e-3), max_iter = 10, tolerance = None)
    assert halving.n_rejections == 0
    assert np.array_equal([r.J for r in fixed.records], [r.J for r in halving.records])
    assert np.array_equal(fixed.terminal_field.samples, halving.terminal_field.samples)


def test_halving_rejects_overshooting_steps(quadratic):
    log = _run(quadratic, eps = 0.0, policy = StepPolicy.halving(100.0, factor = 0.1), max_iter = 5, tolerance = None)
    assert log.n_rejections == 2
    rejected = [r for r in log.records if not r.accepted]
    assert rejected[0].ds == 100.0
    assert np.isclose(rejected[1].ds, 10.0)
    assert all(r.J < log.records[0].J for r in rejected)
    first = log.accepted_records[1]
    assert first.rejections == 2
    assert np.isclose(first.ds, 1.0)
    J = np.array([r.J for r in log.accepted_records])
    assert np.all(np.diff(J) >= 0.0)


def test_halving_step_underflow(quadratic):
    log = _run(quadratic, eps = 0.0, policy = StepPolicy.halving(100.0, factor = 0.1, min_ds = 50.0), max_iter = 5)
    assert log.termination == 'step_underflow'
    assert log.failed
    assert log.n_iterations == 0
    assert np.array_equal(log.terminal_field.samples, quadratic.field.samples)


def test_factorisation_failure(synthetic):
    constraints = ConstraintSet(list(synthetic.constraints))
    constraints.add(Constraint.affine(synthetic.constraints['area'].kernel, target = synthetic.constraints['area'].target, label = 'area_copy'))
    with pytest.warns(UserWarning):
        log = run(synthetic.objective, constraints, synthetic.envelope, synthetic.field, eps = 0.0, max_iter = 5)
    assert log.termination == 'factorisation_failure'
    assert log.failed
    assert len(log.records) == 1

    log = run(synthetic.objective, constraints, synthetic.envelope, synthetic.field, eps = 1e-3,
              policy = StepPolicy.fixed(1e-3), max_iter = 5, tolerance = None)
    assert not log.failed
    assert log.n_iterations == 5


def test_non_finite_objective(quadratic):
    objective = BlowUpObjective(quadratic.objective.center)
    log = run(objective, quadratic.constraints, quadratic.envelope, quadratic.field, eps = 0.0,
              policy = StepPolicy.fixed(1.0), max_iter = 5)
    assert log.termination == 'non_finite'
    assert log.failed
    assert len(log.records) == 1


@pytest.mark.parametrize("policy", [StepPolicy.cfl(), StepPolicy.cfl(curvature = 1.0)])
def test_cfl_policy_is_monotone(quadratic, policy):
    log = _run(quadratic, eps = 0.0, policy = policy, max_iter = 50)
    assert log.n_rejections == 0
    J = np.array([r.J for r in log.accepted_records])
    assert np.all(np.diff(J) >= -1e-12)
    products = np.array([r.cfl_product for r in log.accepted_records[1:]])
    assert np.all(products <= policy.alpha + 1e-9)
    assert J[-1] > J[0]


def test_system_is_accepted_as_objective(synthetic):
    log = _run(synthetic._replace(objective = synthetic.objective.system), eps = 0.0, policy = StepPolicy.fixed(1e-2), max_iter = 2)
    reference = _run(synthetic, eps = 0.0, policy = StepPolicy.fixed(1e-2), max_iter = 2)
    assert np.array_equal([r.J for r in log.records], [r.J for r in reference.records])


def test_trapezoid_drift_quadrature(synthetic):
    left = _run(synthetic, eps = 0.1, policy = StepPolicy.fixed(1e-2), max_iter = 10, tolerance = None)
    trap = _run(synthetic, eps = 0.1, policy = StepPolicy.fixed(1e-2), max_iter = 10, tolerance = None, drift_quadrature = 'trapezoid')
    assert np.array_equal(left.terminal_field.samples, trap.terminal_field.samples)
    assert np.max(np.abs(left.drift_pred - trap.drift_pred)) <= 0.05 * np.max(np.abs(left.drift_pred))


def test_flags(synthetic):
    with pytest.raises(AttributeError):
        GradientFlow(synthetic.objective, synthetic.constraints, synthetic.envelope, print_flag = 'yes')
    with pytest.raises(ValueError):
        GradientFlow(synthetic.objective, synthetic.constraints, synthetic.envelope, drift_quadrature = 'simpson')
    with pytest.raises(ValueError):
        GradientFlow(synthetic.objective, synthetic.constraints, synthetic.envelope, eps = -1.0)


#### log output ####

def test_log_csv(synthetic, tmp_path):
    log = _run(synthetic, eps = 1e-2, policy = StepPolicy.halving(1e-2), max_iter = 3, tolerance = None)
    file_name = log.to_csv(tmp_path / 'log.csv', config_hash = 'abc')
    with open(file_name) as f:
        assert f.readline().startswith('# gramflow')
    df = pd.read_csv(file_name, comment = '#')
    assert df.columns.tolist() == ['k', 's', 'accepted', 'ds', 'J', 'dJ_first', 'g0', 'rho', 'cond', 'sigma_min_sq', 'eps',
                                   'cfl_product', 'rejections', 'h_1', 'h_2', 'drift_pred_1', 'drift_pred_2']
    assert len(df) == 4
    assert np.allclose(df['J'].values, [r.J for r in log.records], rtol = 0.0, atol = 0.0)


def test_log_json_and_table(synthetic, tmp_path):
    log = _run(synthetic, eps = 1e-2, policy = StepPolicy.halving(1e-2), max_iter = 3)
    file_name = log.to_json(tmp_path / 'log.json', config_hash = 'abc')
    with open(file_name) as f:
        info = json.load(f)
    assert info['termination'] == log.termination
    assert info['constraints'] == ['area', 'first_moment']
    assert info['config_hash'] == 'abc'
    assert 'cond' in str(log)


def test_drift_report_layout(synthetic):
    log = _run(synthetic, eps = 0.0, policy = StepPolicy.halving(1e-2), max_iter = 3)
    report = drift_report(log, synthetic.constraints)
    assert report.index.tolist() == ['area', 'first_moment']
    assert report.columns.tolist() == ['measured', 'predicted', 'residual', 'relative', 'bound', 'sharp_bound']
    assert np.all(report['predicted'] == 0.0)
    assert np.all(report['sharp_bound'] == 0.0)


def test_iterations_to(synthetic):
    log = _run(synthetic, eps = 0.0, policy = StepPolicy.halving(1e-2), max_iter = 5, tolerance = None)
    assert log.iterations_to(0.0) == 0
    assert log.iterations_to(2.0) is None
