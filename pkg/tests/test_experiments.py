# Test Strategy
# --------------------------------------------------------
# problems:     synthetic (feasible, S-orthogonal kernels), quadratic (gradient), cached factory
# helpers:      slope fit, breakdown flag
# experiments:  converge, cond-drift, payoff, verify, fields, cfl, drift on small problems;
#               benchmark runs at desk scale are marked slow

import pytest
import numpy as np
from gramflow.defaults import COND_SLOPE_TARGET, COND_SLOPE_TOL, PAIRING_RTOL
from gramflow.config import SweepSpec
from gramflow.gram import assemble, regularize_and_diagnose
from gramflow.flow import StepPolicy, run
from gramflow.experiments import *


#### problems ####

def test_synthetic_problem(synthetic):
    assert synthetic.constraints.labels == ['area', 'first_moment']
    assert synthetic.constraints.is_feasible(synthetic.field)
    sw = synthetic.envelope.weights
    eta1, eta2 = synthetic.constraints['area'].kernel, synthetic.constraints['first_moment'].kernel
    assert abs(sw.dot(eta1 * eta2)) <= 1e-12 * np.sqrt(sw.dot(eta1 * eta1) * sw.dot(eta2 * eta2))
    J0 = synthetic.objective.value(synthetic.field)
    assert 0.05 < J0 < 0.2


def test_synthetic_problem_with_fluence(synthetic_fluence):
    assert synthetic_fluence.constraints.labels == ['area', 'first_moment', 'fluence']
    assert synthetic_fluence.constraints['fluence'].target > 0.0
    assert synthetic_fluence.constraints.is_feasible(synthetic_fluence.field)


def test_quadratic_gradient_finite_difference(quadratic, rng):
    objective = quadratic.objective
    field = quadratic.field.with_samples(rng.standard_normal(quadratic.field.grid.n_points))
    g = objective.gradient(field)
    weights = field.grid.weights
    h = 1e-4
    for k in [1, 50, 100, 150]:
        plus, minus = np.array(field.samples), np.array(field.samples)
        plus[k] += h
        minus[k] -= h
        fd = (objective.value(field.with_samples(plus)) - objective.value(field.with_samples(minus))) / (2.0 * h * weights[k])
        assert abs(fd - g[k]) <= 1e-7


def test_quadratic_problem(quadratic):
    assert quadratic.constraints.labels == ['zero_area']
    assert np.all(quadratic.field.samples == 0.0)
    assert abs(quadratic.constraints['zero_area'].evaluate(quadratic.objective.center)) <= 1e-12


def test_make_problem_is_cached():
    assert make_problem('synthetic') is make_problem('synthetic')
    assert make_problem('synthetic', fluence = True) is not make_problem('synthetic')


#### helpers ####

def test_fit_slope_power_law():
    x = np.logspace(-5, -1, 9)
    slope, intercept, n = fit_slope(x, 3.0 * x ** 2, (1e-5, 1e-1))
    assert np.isclose(slope, 2.0, atol = 1e-10)
    assert np.isclose(intercept, np.log10(3.0), atol = 1e-10)
    assert n == 9


def test_fit_slope_ignores_points_outside_window():
    x = np.array([0.0, 1e-13, 1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    y = np.array([0.0, 0.0, 1e-8, 1e-6, 1e-4, 1e-2, 5.0])
    slope, _, n = fit_slope(x, y, (1e-4, 1e-1))
    assert n == 4
    assert np.isclose(slope, 2.0)


def test_fit_slope_needs_enough_points():
    with pytest.raises(ValueError):
        fit_slope([1e-3, 1e-2, 1e-1], [1.0, 2.0, 3.0], (1e-3, 1e-1))


def test_breakdown_flag(synthetic, quadratic):
    log = run(synthetic.objective, synthetic.constraints, synthetic.envelope, synthetic.field,
              eps = 0.0, policy = StepPolicy.halving(1e-2), max_iter = 3)
    assert not is_breakdown(log)
    log = run(quadratic.objective, quadratic.constraints, quadratic.envelope, quadratic.field,
              eps = 0.0, policy = StepPolicy.fixed(19.0), max_iter = 3, tolerance = None)
    assert is_breakdown(log)


#### experiments on small problems ####

def test_convergence_sweep():
    spec = SweepSpec('converge')
    fit = convergence_sweep(spec)
    assert not fit.table['aborted'].any()
    assert 1.8 <= fit.slope <= 2.2
    assert fit.n_fit == 9
    table = fit.table.set_index('eps')
    assert table.loc[0.0, 'distance'] == 0.0
    assert table.loc[1e-13, 'distance'] <= 1e-15
    assert table['config_hash'].unique().tolist() == [spec.hash]


def test_convergence_sweep_needs_reference():
    with pytest.raises(ValueError):
        convergence_sweep(SweepSpec('converge', eps = [1e-3, 1e-2, 1e-1, 1.0]))


def test_convergence_sweep_window_inside_range():
    with pytest.raises(ValueError):
        convergence_sweep(SweepSpec('converge', eps = [0.0, 1e-3, 1e-2], window = [1e-5, 1e-2]))


def test_cond_drift_sweep():
    spec = SweepSpec('cond-drift', problem = 'synthetic', eps = [0.0, 1e-4, 1e2], ds = [1e-2], steps = 5, window = None)
    df = cond_drift_sweep(spec).set_index('eps')
    assert df['cond_slope'].isnull().all()
    assert df.loc[1e2, 'initial_cond'] <= 1.1
    assert np.isclose(df.loc[1e-4, 'initial_cond'], df.loc[0.0, 'initial_cond'], rtol = 0.05)
    assert df.loc[0.0, 'max_cond'] >= df.loc[1e2, 'max_cond']
    assert np.all(df['rejections'] == 0)


def test_cond_slope_for_large_eps():
    spec = SweepSpec('cond-drift', problem = 'synthetic', eps = [0.0] + list(np.logspace(2, 4, 5)), window = [1e2, 1e4],
                     ds = [1e-2], steps = 3)
    df = cond_drift_sweep(spec)
    assert abs(df['cond_slope'].iloc[0] - COND_SLOPE_TARGET) <= COND_SLOPE_TOL
    tables, ok = run_experiment('cond-drift', spec)
    assert ok
    assert 'cond_slope' in tables['cond-drift'].columns


def test_cond_slope_fails_below_sigma_min():
    spec = SweepSpec('cond-drift', problem = 'synthetic', eps = list(np.logspace(-8, -5, 4)), window = [1e-8, 1e-5],
                     ds = [1e-2], steps = 3)
    tables, ok = run_experiment('cond-drift', spec)
    assert not ok
    assert abs(tables['cond-drift']['cond_slope'].iloc[0]) <= 0.5


def test_run_experiment_checks_convergence_slope():
    tables, ok = run_experiment('converge', SweepSpec('converge'))
    assert ok
    assert 1.8 <= tables['converge']['slope'].iloc[0] <= 2.2


def test_payoff_matrix():
    spec = SweepSpec('payoff', problem = 'synthetic', eps = [0.0, 1e-2], ds = [1e-3, 1e-2], steps = 5)
    df = payoff_matrix(spec)
    assert len(df) == 4
    assert df['ds'].tolist() == [1e-3, 1e-3, 1e-2, 1e-2]
    assert df['eps'].tolist() == [0.0, 1e-2, 0.0, 1e-2]
    assert not df['breakdown'].any()
    assert df['iterations_to_target'].isnull().all()


def test_identity_suite():
    spec = SweepSpec('verify', problem = 'synthetic', ds = [1e-2], steps = 10, trials = 200)
    report = identity_suite(spec)
    assert report.checks['check'].tolist() == ['inverse_bounds', 'spectral_shift', 'first_order_pairing', 'rho_range',
                                               'nonnegative_ascent', 'zero_eps_first_order_pairing', 'zero_eps_rho_range',
                                               'zero_eps_prediction', 'zero_eps_affine_drift']
    assert report.passed
    checks = report.checks.set_index('check')
    assert checks.loc['zero_eps_rho_range', 'value'] == 0.0
    assert checks.loc['zero_eps_first_order_pairing', 'value'] <= PAIRING_RTOL


def test_final_fields():
    spec = SweepSpec('fields', problem = 'synthetic', eps = [0.0, 1e-2], ds = [1e-2], steps = 5)
    out = final_fields(spec)
    assert out.fields.columns.tolist() == ['t', 'E_initial', 'E_eps_0', 'E_eps_0.01']
    D = out.distances.values
    assert np.all(np.diag(D) == 0.0)
    assert np.array_equal(D, D.T)
    assert D[0, 1] > 0.0
    assert len(out.summary) == 2


def test_cfl_check():
    report = cfl_check(SweepSpec('cfl'))
    assert report.monotone
    assert report.max_cfl_product <= 1.9 + 1e-9
    assert report.n_violated_decreases >= 1
    assert report.passed


def test_drift_check():
    report = drift_check(SweepSpec('drift'))
    assert 3.0 <= report.residual_ratio <= 5.0
    assert report.passed
    assert np.all(np.abs(report.table['predicted']) <= report.table['sharp_bound'] * (1.0 + 1e-12))
    assert set(report.table['run']) == {'zero_eps', 'large_eps', 'large_eps_half_step'}


def test_run_experiment_dispatch():
    tables, ok = run_experiment('drift', SweepSpec('drift'))
    assert ok
    assert list(tables.keys()) == ['drift']
    assert 'label' in tabulate(tables['drift'])


#### benchmark at desk scale ####

@pytest.mark.slow
def test_benchmark_first_iterate_is_ill_conditioned(benchmark_desk):
    field = benchmark_desk.field
    gradients = [benchmark_desk.objective.gradient(field)] + benchmark_desk.constraints.gradients(field)
    gram = regularize_and_diagnose(assemble(benchmark_desk.envelope, gradients), 0.0)
    assert 1e8 <= gram.cond <= 1e12


@pytest.mark.slow
def test_benchmark_baseline_keeps_zero_area():
    spec = SweepSpec('baseline', steps = 20)
    df = baseline_run(spec)
    assert df['abs_h1'].max() <= 1e-6
    assert np.all(np.diff(df['J'].values) >= -1e-10)


@pytest.mark.slow
def test_benchmark_identity_suite():
    report = identity_suite(SweepSpec('verify', steps = 20, trials = 200))
    assert report.passed
