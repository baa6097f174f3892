"""
Experiment harness: baseline diagnostics, eps sweeps, step-size payoff, identity checks,
final-field comparison, CFL and drift checks

every table carries the hash of the SweepSpec that produced it
"""
import logging
import warnings
import functools
import numpy as np
import pandas as pd
from collections import namedtuple
from multiprocessing import Pool
from prettytable import PrettyTable
from tqdm.auto import tqdm
from gramflow.defaults import *
from gramflow.config import SweepSpec
from gramflow.model import TimeGrid, ControlField, QuantumSystem, FidelityObjective, Evaluation, build_benchmark
from gramflow.constraints import Constraint, ConstraintSet, benchmark_constraints
from gramflow.gram import assemble, build_envelope, regularize_and_diagnose, lemma_suite, spectral_shift_check
from gramflow.flow import Problem, StepPolicy, run, drift_report, velocity, cfl_step_bound, estimate_curvature
from gramflow.numkit import trapezoid

__all__ = ['QuadraticObjective', 'SlopeFit', 'IdentityReport', 'FinalFields', 'CflReport', 'DriftCheck',
           'benchmark_problem', 'synthetic_problem', 'quadratic_problem', 'make_problem', 'fit_slope', 'is_breakdown',
           'baseline_run', 'convergence_sweep', 'cond_drift_sweep', 'payoff_matrix', 'identity_suite',
           'final_fields', 'cfl_check', 'drift_check', 'run_experiment', 'tabulate']

logger = logging.getLogger(__name__)

SlopeFit = namedtuple('SlopeFit', ['eps', 'distances', 'slope', 'intercept', 'window', 'n_fit', 'table'])
IdentityReport = namedtuple('IdentityReport', ['passed', 'checks'])
FinalFields = namedtuple('FinalFields', ['fields', 'summary', 'distances'])
CflReport = namedtuple('CflReport', ['passed', 'monotone', 'max_cfl_product', 'max_decrease', 'n_violated_decreases', 'table'])
DriftCheck = namedtuple('DriftCheck', ['passed', 'residual_ratio', 'table'])


#### problems ####

class QuadraticObjective(object):
    """
    J[E] = -kappa / 2 ||E - E*||^2 (trapezoid norm); the second variation is exactly -kappa along every unit direction
    """

    def __init__(self, center, curvature = QUADRATIC_CURVATURE):
        assert isinstance(center, ControlField)
        curvature = float(curvature)
        if not curvature > 0.0:
            raise ValueError('curvature must be positive')
        self._center = center
        self._curvature = curvature

    @property
    def center(self):
        return self._center

    @property
    def curvature(self):
        return self._curvature

    def value(self, field):
        d = field.samples - self._center.samples
        return -0.5 * self._curvature * trapezoid(d * d, field.grid.dt)

    def gradient(self, field):
        return -self._curvature * (field.samples - self._center.samples)

    def evaluate(self, field):
        return Evaluation(J = self.value(field), gradient = self.gradient(field), trajectory = None)

    def __repr__(self):
        return 'QuadraticObjective(curvature = %r)' % self._curvature


def benchmark_problem(tau_fs = DEFAULT_TAU_FS, n_points = DESK_N_POINTS, gradient_rule = DEFAULT_GRADIENT_RULE):
    """three-level benchmark with its three constraints and the Gaussian envelope of width tau centred at t = 0"""
    bm = build_benchmark(tau_fs = tau_fs, n_points = n_points)
    envelope = build_envelope(bm.grid, bm.params.tau, center = 0.0)
    return Problem(objective = FidelityObjective(bm.system, gradient_rule = gradient_rule),
                   constraints = benchmark_constraints(bm),
                   envelope = envelope,
                   field = bm.field,
                   name = 'benchmark_%gfs' % tau_fs)


def synthetic_problem(n_points = SYNTHETIC_N_POINTS, fluence = False):
    """
    resonantly driven two-level system with two affine constraints whose kernels are S-orthogonal,
    so that the constraint block of the Gram matrix is well conditioned

    :param n_points: grid size on [0, 20]
    :param fluence: set to True to add a fluence constraint
    :return: Problem with targets taken from the initial field
    """
    grid = TimeGrid(SYNTHETIC_SPAN[0], SYNTHETIC_SPAN[1], n_points)
    t = grid.times
    center = 0.5 * (grid.t_start + grid.t_end)
    w, omega = SYNTHETIC_WIDTH, SYNTHETIC_OMEGA

    system = QuantumSystem(H0 = np.diag([-0.5 * omega, 0.5 * omega]), mu = [[0.0, 1.0], [1.0, 0.0]], psi0 = [1.0, 0.0], psif = [0.0, 1.0])
    E = SYNTHETIC_AMPLITUDE * np.exp(-(t - center) ** 2 / (2.0 * w ** 2)) * np.cos(omega * (t - center))
    field = ControlField(grid, E)
    envelope = build_envelope(grid, w, center = center)

    # Gram-Schmidt under the S-weighted inner product
    sw = envelope.weights
    eta1 = np.ones_like(t)
    eta2 = (t - center) / w
    eta2 = eta2 - (sw.dot(eta2) / sw.dot(eta1)) * eta1

    constraints = ConstraintSet([Constraint.affine(eta1, label = 'area'), Constraint.affine(eta2, label = 'first_moment')])
    if fluence:
        constraints.add(Constraint.fluence(0.0, label = 'fluence'))
    constraints = constraints.with_targets_from(field)
    return Problem(objective = FidelityObjective(system), constraints = constraints, envelope = envelope, field = field,
                   name = 'synthetic' + ('_fluence' if fluence else ''))


def quadratic_problem(n_points = QUADRATIC_N_POINTS, curvature = QUADRATIC_CURVATURE):
    """
    quadratic toy on [0, 10]: E* is odd about the centre, E0 = 0, one zero-area constraint
    """
    grid = TimeGrid(QUADRATIC_SPAN[0], QUADRATIC_SPAN[1], n_points)
    t = grid.times
    center = 0.5 * (grid.t_start + grid.t_end)
    target = QUADRATIC_AMPLITUDE * np.sin(2.0 * np.pi * (t - center) / grid.duration)
    objective = QuadraticObjective(ControlField(grid, target), curvature = curvature)
    constraints = ConstraintSet([Constraint.affine(np.ones_like(t), target = 0.0, label = 'zero_area')])
    envelope = build_envelope(grid, QUADRATIC_WIDTH, center = center)
    return Problem(objective = objective, constraints = constraints, envelope = envelope,
                   field = ControlField(grid, np.zeros_like(t)), name = 'quadratic')


@functools.lru_cache(maxsize = 32)
def make_problem(kind, tau_fs = DEFAULT_TAU_FS, n_points = None, fluence = False):
    """cached problem factory used by sweep cells"""
    assert kind in VALID_PROBLEM_KINDS
    if kind == 'benchmark':
        return benchmark_problem(tau_fs = tau_fs, n_points = n_points or DESK_N_POINTS)
    elif kind == 'synthetic':
        return synthetic_problem(n_points = n_points or SYNTHETIC_N_POINTS, fluence = fluence)
    return quadratic_problem(n_points = n_points or QUADRATIC_N_POINTS)


#### helpers ####

def fit_slope(x, y, window):
    """
    least-squares slope of log10(y) against log10(x) over x in window

    :return: (slope, intercept, number of points used)
    """
    x = np.asarray(x, dtype = float)
    y = np.asarray(y, dtype = float)
    lo, hi = window
    inside = (x >= lo * (1.0 - 1e-9)) & (x <= hi * (1.0 + 1e-9))
    usable = inside & (x > 0.0) & np.isfinite(y) & (y > 0.0)
    if np.sum(usable) < MIN_WINDOW_POINTS:
        raise ValueError('need at least %d usable points in window [%g, %g], got %d' % (MIN_WINDOW_POINTS, lo, hi, np.sum(usable)))
    slope, intercept = np.polyfit(np.log10(x[usable]), np.log10(y[usable]), 1)
    return float(slope), float(intercept), int(np.sum(usable))


def _fit_or_nan(x, y, window):
    """fit_slope, or (nan, nan, 0) with a warning when aborted cells leave too few points"""
    try:
        return fit_slope(x, y, window)
    except ValueError as e:
        warnings.warn('slope fit skipped: %s' % str(e))
        return np.nan, np.nan, 0


def is_breakdown(log, margin = BREAKDOWN_MARGIN):
    """
    a run breaks down if any attempted J falls below J(0) - margin, a value becomes non-finite,
    or the run terminates with a failure
    """
    J = np.array([r.J for r in log.records], dtype = float)
    if log.failed or not np.all(np.isfinite(J)) or not np.all(np.isfinite(log.terminal_field.samples)):
        return True
    return bool(np.any(J < J[0] - margin))


def _label(constraints, kind):
    """:return: label of the first constraint of a kind, or None"""
    for c in constraints:
        if c.kind == kind:
            return c.label
    return None


def _relative_drift(log, label):
    if label is None:
        return np.nan
    m = log.labels.index(label)
    target = log.targets[m]
    h = log.accepted_records[-1].h[m]
    return float((h - target) / max(abs(target), RELATIVE_DRIFT_FLOOR))


def _problem_for(spec, tau_fs = None, fluence = False):
    tau_fs = spec.taus[0] if tau_fs is None else tau_fs
    return make_problem(spec.problem, tau_fs = tau_fs, n_points = spec.n_points, fluence = fluence)


def _job(spec, eps, ds, tau_fs = None, policy = None, fluence = False, max_iter = None):
    return {'problem': spec.problem,
            'tau_fs': spec.taus[0] if tau_fs is None else tau_fs,
            'n_points': spec.n_points,
            'fluence': fluence,
            'eps': float(eps),
            'policy': policy if policy is not None else StepPolicy.halving(ds).to_dict(),
            'tolerance': spec.tolerance,
            'max_iter': spec.steps if max_iter is None else max_iter}


def _run_cell(job):
    problem = make_problem(job['problem'], tau_fs = job['tau_fs'], n_points = job['n_points'], fluence = job['fluence'])
    log = run(problem.objective, problem.constraints, problem.envelope, problem.field,
              eps = job['eps'], policy = StepPolicy.from_dict(job['policy']),
              tolerance = job['tolerance'], max_iter = job['max_iter'], check_flag = False)
    return job, log


def _run_cells(jobs, n_jobs = 1, desc = None):
    """runs independent flow jobs; results come back in job order"""
    results = []
    if n_jobs > 1:
        with Pool(n_jobs) as pool:
            for out in tqdm(pool.imap(_run_cell, jobs), total = len(jobs), desc = desc):
                results.append(out)
    else:
        for job in tqdm(jobs, desc = desc):
            results.append(_run_cell(job))
    return results


#### experiments ####

def baseline_run(spec):
    """
    per-iteration J, relative fluence drift, |h_1| and cond(Gamma) for each tau in spec.taus
    (eps = spec.eps[0], halving policy with spec.ds[0])

    :return: pandas.DataFrame
    """
    jobs = [_job(spec, spec.eps[0], spec.ds[0], tau_fs = tau) for tau in spec.taus]
    rows = []
    for job, log in _run_cells(jobs, spec.n_jobs, desc = 'baseline'):
        problem = _problem_for(spec, job['tau_fs'])
        fluence = _label(problem.constraints, 'fluence')
        affine = _label(problem.constraints, 'affine')
        for r in log.accepted_records:
            row = {'tau_fs': job['tau_fs'], 'k': r.k, 's': r.s, 'J': r.J, 'cond': r.cond}
            if fluence is not None:
                m = log.labels.index(fluence)
                row['fluence_drift_rel'] = (r.h[m] - log.targets[m]) / max(abs(log.targets[m]), RELATIVE_DRIFT_FLOOR)
            else:
                row['fluence_drift_rel'] = np.nan
            row['abs_h1'] = abs(r.h[log.labels.index(affine)] - log.targets[log.labels.index(affine)]) if affine is not None else np.nan
            row['termination'] = log.termination
            rows.append(row)
    df = pd.DataFrame(rows, columns = ['tau_fs', 'k', 's', 'J', 'fluence_drift_rel', 'abs_h1', 'cond', 'termination'])
    df['config_hash'] = spec.hash
    return df


def convergence_sweep(spec, tau_fs = None):
    """
    relative L2 distance between the eps-regularised and unregularised fields after a common number of steps,
    with a log-log slope fit over spec.window

    every run uses the halving policy with the same step; a run with any rejection (or a different accepted step
    sequence) would break the comparison, so it is aborted and its distance is NaN

    :return: SlopeFit
    """
    eps = np.array(spec.eps)
    assert np.any(eps == 0.0) and spec.window is not None

    jobs = [_job(spec, e, spec.ds[0], tau_fs = tau_fs) for e in eps]
    results = _run_cells(jobs, spec.n_jobs, desc = 'converge')
    ref = [log for job, log in results if job['eps'] == 0.0][0]
    ref_ok = ref.n_rejections == 0 and not ref.failed
    if not ref_ok:
        warnings.warn('reference run (eps = 0) had %d rejections and terminated with %s' % (ref.n_rejections, ref.termination))
    ref_norm = ref.terminal_field.norm()

    rows = []
    for job, log in results:
        aborted = (not ref_ok) or log.n_rejections > 0 or log.failed or not np.array_equal(log.step_sizes, ref.step_sizes)
        if aborted and job['eps'] > 0.0:
            warnings.warn('sweep cell eps = %g aborted: %d rejections, termination %s' % (job['eps'], log.n_rejections, log.termination))
        distance = np.nan if aborted else log.terminal_field.distance(ref.terminal_field) / ref_norm
        rows.append({'eps': job['eps'], 'distance': distance, 'aborted': aborted, 'rejections': log.n_rejections,
                     'n_iterations': log.n_iterations, 's': ref.accepted_records[-1].s if not aborted else np.nan,
                     'final_J': log.final_J, 'termination': log.termination})

    table = pd.DataFrame(rows)
    table['config_hash'] = spec.hash
    slope, intercept, n_fit = _fit_or_nan(table['eps'].values, table['distance'].values, spec.window)
    logger.info('convergence slope %1.3f over eps in [%g, %g] (%d points)', slope, spec.window[0], spec.window[1], n_fit)
    return SlopeFit(eps = table['eps'].values, distances = table['distance'].values, slope = slope, intercept = intercept,
                    window = spec.window, n_fit = n_fit, table = table)


def cond_drift_sweep(spec, tau_fs = None):
    """
    per eps: maximum cond(Gamma_eps) along the run and the terminal relative fluence drift;
    cond_slope is the log-log slope of max_cond - 1 against eps over spec.window (NaN without a window)

    :return: pandas.DataFrame
    """
    problem = _problem_for(spec, tau_fs, fluence = True)
    fluence = _label(problem.constraints, 'fluence')
    jobs = [_job(spec, e, spec.ds[0], tau_fs = tau_fs, fluence = True) for e in spec.eps]
    rows = []
    for job, log in _run_cells(jobs, spec.n_jobs, desc = 'cond-drift'):
        cond = np.array([r.cond for r in log.accepted_records], dtype = float)
        rows.append({'eps': job['eps'],
                     'max_cond': float(np.nanmax(cond)) if np.any(np.isfinite(cond)) else np.nan,
                     'initial_cond': float(cond[0]),
                     'fluence_drift_rel': _relative_drift(log, fluence),
                     'final_J': log.final_J,
                     'n_iterations': log.n_iterations,
                     'rejections': log.n_rejections,
                     'termination': log.termination})
    df = pd.DataFrame(rows)
    df['cond_slope'] = np.nan
    if spec.window is not None:
        slope, _, n_fit = _fit_or_nan(df['eps'].values, df['max_cond'].values - 1.0, spec.window)
        logger.info('cond slope %1.3f over eps in [%g, %g] (%d points)', slope, spec.window[0], spec.window[1], n_fit)
        df['cond_slope'] = slope
    df['config_hash'] = spec.hash
    return df


def payoff_matrix(spec, tau_fs = None, target = TARGET_FIDELITY):
    """
    per (ds, eps) cell: accepted iterations to J >= target, rejections, terminal fluence drift and breakdown flag

    :return: pandas.DataFrame ordered by ds then eps
    """
    problem = _problem_for(spec, tau_fs, fluence = True)
    fluence = _label(problem.constraints, 'fluence')
    jobs = [_job(spec, e, ds, tau_fs = tau_fs, fluence = True) for ds in spec.ds for e in spec.eps]
    rows = []
    for job, log in _run_cells(jobs, spec.n_jobs, desc = 'payoff'):
        hit = log.iterations_to(target)
        rows.append({'ds': job['policy']['ds'],
                     'eps': job['eps'],
                     'iterations_to_target': np.nan if hit is None else hit,
                     'rejections': log.n_rejections,
                     'fluence_drift_rel': _relative_drift(log, fluence),
                     'final_J': log.final_J,
                     'termination': log.termination,
                     'breakdown': is_breakdown(log)})
    df = pd.DataFrame(rows)
    df['config_hash'] = spec.hash
    return df


def _pairing_checks(log, prefix):
    """
    first-order pairing <c_0, v>_L2 = g0 rho and rho in [0, 1] on every evaluated accepted iterate

    the pairing error is the residual of the solve Gamma_eps x = e_0, so it is measured relative to g0 cond(Gamma_eps)
    """
    records = [r for r in log.accepted_records if np.isfinite(r.pairing)]
    tiny = np.finfo(float).tiny
    errors = [abs(r.pairing - r.dJ_first) / max(r.g0 * max(r.cond, 1.0), tiny) for r in records]
    pairing_err = float(np.max(errors)) if errors else 0.0
    rho = np.array([r.rho for r in records])
    rho_excess = float(max(-rho.min(), rho.max() - 1.0, 0.0)) if rho.size else 0.0
    return [{'check': prefix + 'first_order_pairing', 'passed': pairing_err <= PAIRING_RTOL and not log.failed,
             'value': pairing_err, 'tolerance': PAIRING_RTOL},
            {'check': prefix + 'rho_range', 'passed': rho_excess <= 1e-12, 'value': rho_excess, 'tolerance': 1e-12}]


def identity_suite(spec, tau_fs = None):
    """
    random-matrix checks of the inverse bounds and of the spectral shift; first-order pairing and rho in [0, 1]
    on the eps > 0 run and on the eps = 0 run; zero predicted drift at eps = 0

    :return: IdentityReport(passed, checks) with one row per check
    """
    checks = []

    lemma = lemma_suite(spec.trials, dim = DEFAULT_LEMMA_DIM, seed = spec.seed)
    worst = min(lemma.worst_lower_margin, lemma.worst_upper_margin, lemma.worst_cs_margin)
    checks.append({'check': 'inverse_bounds', 'passed': lemma.n_violations == 0, 'value': worst, 'tolerance': -1e-12})

    shift = spectral_shift_check(spec.trials, dim = DEFAULT_LEMMA_DIM, seed = spec.seed, eps_values = SHIFT_CHECK_EPS)
    checks.append({'check': 'spectral_shift', 'passed': shift.n_violations == 0, 'value': shift.worst_error, 'tolerance': 1e-12})

    problem = _problem_for(spec, tau_fs, fluence = True)
    jobs = [_job(spec, spec.eps[0], spec.ds[0], tau_fs = tau_fs, fluence = True),
            _job(spec, 0.0, spec.ds[0], tau_fs = tau_fs, fluence = True)]
    (_, log), (_, log0) = _run_cells(jobs, spec.n_jobs, desc = 'verify')

    checks += _pairing_checks(log, '')
    min_rate = min(r.dJ_first for r in log.accepted_records)
    checks.append({'check': 'nonnegative_ascent', 'passed': min_rate >= -1e-15, 'value': min_rate, 'tolerance': -1e-15})
    checks += _pairing_checks(log0, 'zero_eps_')

    predicted = np.array([r.drift_pred for r in log0.records])
    checks.append({'check': 'zero_eps_prediction', 'passed': bool(np.all(predicted == 0.0)),
                   'value': float(np.max(np.abs(predicted))) if predicted.size else 0.0, 'tolerance': 0.0})
    report = drift_report(log0, problem.constraints)
    affine = [c.label for c in problem.constraints if c.is_affine]
    affine_drift = float(np.max(np.abs(report.loc[affine, 'measured']))) if len(affine) > 0 else 0.0
    checks.append({'check': 'zero_eps_affine_drift', 'passed': affine_drift <= AFFINE_DRIFT_ATOL and not log0.failed,
                   'value': affine_drift, 'tolerance': AFFINE_DRIFT_ATOL})

    df = pd.DataFrame(checks, columns = ['check', 'passed', 'value', 'tolerance'])
    df['config_hash'] = spec.hash
    return IdentityReport(passed = bool(df['passed'].all()), checks = df)


def final_fields(spec, tau_fs = None):
    """
    initial and final fields for every eps in the spec, with final fidelities and pairwise L2 distances
    relative to the norm of the initial field

    :return: FinalFields(fields, summary, distances)
    """
    problem = _problem_for(spec, tau_fs, fluence = True)
    fluence = _label(problem.constraints, 'fluence')
    jobs = [_job(spec, e, spec.ds[0], tau_fs = tau_fs, fluence = True) for e in spec.eps]
    results = _run_cells(jobs, spec.n_jobs, desc = 'fields')

    fields = pd.DataFrame({'t': problem.field.times, 'E_initial': problem.field.samples})
    summary, finals = [], []
    for job, log in results:
        name = 'E_eps_%g' % job['eps']
        fields[name] = log.terminal_field.samples
        finals.append((name, log.terminal_field))
        summary.append({'eps': job['eps'], 'final_J': log.final_J, 'n_iterations': log.n_iterations,
                        'rejections': log.n_rejections, 'fluence_drift_rel': _relative_drift(log, fluence),
                        'termination': log.termination})

    scale = problem.field.norm()
    names = [n for n, _ in finals]
    D = np.array([[a.distance(b) / scale for _, b in finals] for _, a in finals])
    distances = pd.DataFrame(D, index = names, columns = names)
    summary = pd.DataFrame(summary)
    summary['config_hash'] = spec.hash
    return FinalFields(fields = fields, summary = summary, distances = distances)


def cfl_check(spec, tau_fs = None):
    """
    runs the CFL policy (curvature estimated along the velocity and inflated by spec.safety) and a fixed step
    CFL_VIOLATION_FACTOR times the bound computed with the bare curvature at the initial iterate

    passes if the CFL run never decreases J by more than 1e-12 in an accepted step, every recorded
    cfl_product stays within alpha, and the violated run decreases J at least once

    :return: CflReport
    """
    problem = _problem_for(spec, tau_fs)
    eps = spec.eps[0]
    policy = StepPolicy.cfl(alpha = spec.alpha, safety = spec.safety)
    log = run(problem.objective, problem.constraints, problem.envelope, problem.field, eps = eps, policy = policy,
              tolerance = spec.tolerance, max_iter = spec.steps)
    J = np.array([r.J for r in log.accepted_records])
    max_decrease = float(np.max(J[:-1] - J[1:])) if len(J) > 1 else 0.0
    products = np.array([r.cfl_product for r in log.accepted_records[1:]])
    max_product = float(np.nanmax(products)) if np.any(np.isfinite(products)) else np.nan
    monotone = max_decrease <= 1e-12 and (not np.isfinite(max_product) or max_product <= spec.alpha + 1e-9)

    # violated run
    objective = problem.objective
    ev = objective.evaluate(problem.field)
    gradients = [ev.gradient] + problem.constraints.gradients(problem.field)
    gram = regularize_and_diagnose(assemble(problem.envelope, gradients), eps)
    if isinstance(objective, QuadraticObjective):
        G = objective.curvature
    else:
        G = estimate_curvature(objective, problem.field, velocity(problem.field, problem.envelope, gram, gradients), safety = 1.0)
    ds = CFL_VIOLATION_FACTOR * cfl_step_bound(G, gram, spec.alpha)
    violated = run(problem.objective, problem.constraints, problem.envelope, problem.field, eps = eps,
                   policy = StepPolicy.fixed(ds), tolerance = None, max_iter = min(spec.steps, 5))
    Jv = np.array([r.J for r in violated.accepted_records])
    n_decreases = int(np.sum(np.diff(Jv) < 0.0))

    table = pd.DataFrame([
        {'run': 'cfl', 'ds_first': log.accepted_records[1].ds if len(log.accepted_records) > 1 else np.nan,
         'max_cfl_product': max_product, 'max_decrease': max_decrease, 'n_decreases': int(np.sum(np.diff(J) < 0.0)),
         'final_J': log.final_J, 'termination': log.termination},
        {'run': 'violated', 'ds_first': ds, 'max_cfl_product': CFL_VIOLATION_FACTOR * spec.alpha,
         'max_decrease': float(np.max(Jv[:-1] - Jv[1:])) if len(Jv) > 1 else 0.0, 'n_decreases': n_decreases,
         'final_J': violated.final_J, 'termination': violated.termination},
        ])
    table['config_hash'] = spec.hash
    return CflReport(passed = bool(monotone and n_decreases >= 1), monotone = bool(monotone), max_cfl_product = max_product,
                     max_decrease = max_decrease, n_violated_decreases = n_decreases, table = table)


def drift_check(spec, tau_fs = None):
    """
    eps = 0: predicted drift identically zero and affine drift within AFFINE_DRIFT_ATOL
    eps = spec.eps[0] > 0: fixed steps ds and ds / 2 for spec.steps steps each; the fluence residual
    (measured - predicted) comes from the O(ds^2) term of the Euler step, so halving ds shrinks it about 4x
    every run: |predicted| within the accumulated sharp bound int g0 L_m ds

    :return: DriftCheck(passed, residual_ratio, table)
    """
    problem = _problem_for(spec, tau_fs, fluence = True)
    fluence = _label(problem.constraints, 'fluence')
    affine = [c.label for c in problem.constraints if c.is_affine]
    ds = spec.ds[0]
    eps = spec.eps[0] if spec.eps[0] > 0.0 else DRIFT_CHECK_EPS

    jobs = [_job(spec, 0.0, ds, tau_fs = tau_fs, fluence = True, policy = StepPolicy.fixed(ds).to_dict()),
            _job(spec, eps, ds, tau_fs = tau_fs, fluence = True, policy = StepPolicy.fixed(ds).to_dict()),
            _job(spec, eps, ds, tau_fs = tau_fs, fluence = True, policy = StepPolicy.fixed(0.5 * ds).to_dict())]
    results = _run_cells(jobs, spec.n_jobs, desc = 'drift')

    frames = []
    for name, (job, log) in zip(['zero_eps', 'large_eps', 'large_eps_half_step'], results):
        report = drift_report(log, problem.constraints).reset_index()
        report.insert(0, 'ds', job['policy']['ds'])
        report.insert(0, 'eps', job['eps'])
        report.insert(0, 'run', name)
        report['termination'] = log.termination
        frames.append(report)
    table = pd.concat(frames, ignore_index = True)
    table['config_hash'] = spec.hash

    zero = table[table['run'] == 'zero_eps'].set_index('label')
    passed = bool(np.all(zero['predicted'] == 0.0))
    if len(affine) > 0:
        passed &= bool(np.max(np.abs(zero.loc[affine, 'measured'])) <= AFFINE_DRIFT_ATOL)

    ratio = np.nan
    if fluence is not None:
        full = table[(table['run'] == 'large_eps') & (table['label'] == fluence)]['residual'].iloc[0]
        half = table[(table['run'] == 'large_eps_half_step') & (table['label'] == fluence)]['residual'].iloc[0]
        ratio = float(abs(full) / abs(half)) if half != 0.0 else np.inf
        passed &= bool(3.0 <= ratio <= 5.0)
    passed &= bool(np.all(np.abs(table['predicted']) <= table['sharp_bound'] * (1.0 + 1e-12)))
    passed &= not any(log.failed for _, log in results)
    return DriftCheck(passed = passed, residual_ratio = ratio, table = table)


#### dispatch ####

def run_experiment(name, spec):
    """
    :return: dict of named DataFrames for output, and a flag that is False if an identity or property check failed
    """
    assert isinstance(spec, SweepSpec) and name == spec.experiment
    tables, ok = {}, True
    if name == 'baseline':
        tables['baseline'] = baseline_run(spec)
    elif name == 'converge':
        frames = []
        for tau in spec.taus if spec.problem == 'benchmark' else spec.taus[:1]:
            fit = convergence_sweep(spec, tau_fs = tau)
            t = fit.table.copy()
            t.insert(0, 'tau_fs', tau)
            t['slope'] = fit.slope
            frames.append(t)
            ok &= bool(CONVERGENCE_SLOPE_RANGE[0] <= fit.slope <= CONVERGENCE_SLOPE_RANGE[1])
        tables['converge'] = pd.concat(frames, ignore_index = True)
    elif name == 'cond-drift':
        frames = [cond_drift_sweep(spec, tau).assign(tau_fs = tau) for tau in spec.taus]
        tables['cond-drift'] = pd.concat(frames, ignore_index = True)
        if spec.window is not None:
            ok = all(abs(df['cond_slope'].iloc[0] - COND_SLOPE_TARGET) <= COND_SLOPE_TOL for df in frames)
    elif name == 'payoff':
        tables['payoff'] = pd.concat([payoff_matrix(spec, tau).assign(tau_fs = tau) for tau in spec.taus], ignore_index = True)
    elif name == 'verify':
        report = identity_suite(spec)
        tables['verify'] = report.checks
        ok = report.passed
    elif name == 'fields':
        out = final_fields(spec)
        tables['fields'] = out.fields
        tables['fields-summary'] = out.summary
    elif name == 'cfl':
        report = cfl_check(spec)
        tables['cfl'] = report.table
        ok = report.passed
    elif name == 'drift':
        report = drift_check(spec)
        tables['drift'] = report.table
        ok = report.passed
    else:
        raise ValueError('unknown experiment %s' % name)
    return tables, ok


def tabulate(df, max_rows = 20, float_format = '%1.4e'):
    """PrettyTable rendering of a result table for the console"""
    t = PrettyTable()
    shown = df if len(df) <= max_rows else pd.concat([df.head(max_rows // 2), df.tail(max_rows // 2)])
    for col in shown.columns:
        if col == 'config_hash':
            continue
        values = shown[col].tolist()
        if np.issubdtype(shown[col].dtype, np.floating):
            values = [float_format % v for v in values]
        t.add_column(str(col), values, align = 'r')
    return str(t)
