"""
Forward-Euler integration of the Tikhonov-regularised projected gradient flow

    E <- E + ds * v,   v = S g0 sum_l x_l c_l,   (Gamma + eps^2 I) x = e_0
"""
import time
import logging
import warnings
import numpy as np
import pandas as pd
from collections import namedtuple
from prettytable import PrettyTable
from gramflow.defaults import *
from gramflow.errors import FactorizationError
from gramflow.helper_functions import parse_samples, write_csv, write_json
from gramflow.model import ControlField, QuantumSystem, FidelityObjective
from gramflow.constraints import ConstraintSet
from gramflow.gram import Envelope, GramData, assemble, regularize_and_diagnose
from gramflow.numkit import trapezoid

__all__ = ['Problem', 'StepPolicy', 'FlowState', 'IterationRecord', 'FlowLog', 'GradientFlow',
           'velocity', 'cfl_step_bound', 'estimate_curvature', 'run', 'drift_report']

logger = logging.getLogger(__name__)

# everything a flow run needs besides eps and the step policy
Problem = namedtuple('Problem', ['objective', 'constraints', 'envelope', 'field', 'name'])


class StepPolicy(object):
    """
    Step-size rule for the Euler update

    fixed:   constant ds
    halving: start at ds; a step that decreases J is rejected and retried with ds * factor until ds < min_ds
    cfl:     ds = alpha / (G g0 ||Gamma_eps^{-1}||_2), capped at ds; G is either given (curvature)
             or estimated along the velocity every `refresh` accepted steps and inflated by `safety`
    """

    _valid_kinds = VALID_POLICY_KINDS

    def __init__(self, kind = DEFAULT_POLICY_KIND, ds = None, **kwargs):

        if kind not in self._valid_kinds:
            raise ValueError('policy kind must be one of %r, got %r' % (self._valid_kinds, kind))
        if ds is None:
            ds = np.inf if kind == 'cfl' else DEFAULT_STEP

        self._kind = kind
        self._ds = float(ds)
        self._factor = float(kwargs.get('factor', DEFAULT_HALVING_FACTOR))
        self._min_ds = float(kwargs.get('min_ds', DEFAULT_MIN_STEP))
        self._alpha = float(kwargs.get('alpha', DEFAULT_CFL_ALPHA))
        curvature = kwargs.get('curvature', None)
        self._curvature = None if curvature is None else float(curvature)
        self._safety = float(kwargs.get('safety', DEFAULT_CURVATURE_SAFETY))
        self._refresh = int(kwargs.get('refresh', DEFAULT_CURVATURE_REFRESH))
        self._probe = float(kwargs.get('probe', DEFAULT_CURVATURE_PROBE))

        if not self._ds > 0.0:
            raise ValueError('ds must be positive')
        if not 0.0 < self._factor < 1.0:
            raise ValueError('factor must lie in (0, 1)')
        if not self._min_ds > 0.0:
            raise ValueError('min_ds must be positive')
        if not 0.0 < self._alpha < 2.0:
            raise ValueError('alpha must lie in (0, 2)')
        if self._curvature is not None and not self._curvature > 0.0:
            raise ValueError('curvature must be positive')
        if not (self._safety >= 1.0 and self._refresh >= 1 and self._probe > 0.0):
            raise ValueError('safety must be >= 1, refresh >= 1 and probe > 0')

    @classmethod
    def fixed(cls, ds):
        return cls(kind = 'fixed', ds = ds)

    @classmethod
    def halving(cls, ds, factor = DEFAULT_HALVING_FACTOR, min_ds = DEFAULT_MIN_STEP):
        return cls(kind = 'halving', ds = ds, factor = factor, min_ds = min_ds)

    @classmethod
    def cfl(cls, alpha = DEFAULT_CFL_ALPHA, curvature = None, ds_max = np.inf, **kwargs):
        return cls(kind = 'cfl', ds = ds_max, alpha = alpha, curvature = curvature, **kwargs)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop('kind', DEFAULT_POLICY_KIND)
        ds = d.pop('ds', None)
        return cls(kind = kind, ds = ds, **d)

    #### properties ####
    @property
    def kind(self):
        return self._kind

    @property
    def ds(self):
        return self._ds

    @property
    def factor(self):
        return self._factor

    @property
    def min_ds(self):
        return self._min_ds

    @property
    def alpha(self):
        return self._alpha

    @property
    def curvature(self):
        return self._curvature

    @property
    def safety(self):
        return self._safety

    @property
    def refresh(self):
        return self._refresh

    @property
    def probe(self):
        return self._probe

    def to_dict(self):
        d = {'kind': self._kind, 'ds': self._ds}
        if self._kind == 'halving':
            d.update({'factor': self._factor, 'min_ds': self._min_ds})
        elif self._kind == 'cfl':
            d.update({'alpha': self._alpha, 'curvature': self._curvature, 'safety': self._safety,
                      'refresh': self._refresh, 'probe': self._probe})
        return d

    def __eq__(self, other):
        return isinstance(other, StepPolicy) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return 'StepPolicy(%s)' % ', '.join('%s = %r' % kv for kv in self.to_dict().items())


class FlowState(object):
    """
    Current iterate of the flow with accumulated morphing time and drift predictions
    """

    def __init__(self, field, n_constraints):
        self.field = field
        self.iteration = 0
        self.s_accum = 0.0
        self.drift_pred = np.zeros(n_constraints)
        self.drift_bound = 0.0
        self.sharp_bound = np.zeros(n_constraints)

    def advance(self, field, ds, drift_increment, bound_increment, sharp_increment):
        """records an accepted step"""
        self.field = field
        self.iteration += 1
        self.s_accum += ds
        self.drift_pred = self.drift_pred + drift_increment
        self.drift_bound += bound_increment
        self.sharp_bound = self.sharp_bound + sharp_increment


# one row per attempt; h and drift_pred have one entry per constraint
IterationRecord = namedtuple('IterationRecord', ['k', 's', 'accepted', 'ds', 'J', 'dJ_first', 'g0', 'rho', 'cond',
                                                 'sigma_min_sq', 'eps', 'cfl_product', 'rejections', 'h', 'drift_pred',
                                                 'pairing', 'inv_norm', 'curvature'])

_CSV_COLUMNS = ['k', 's', 'accepted', 'ds', 'J', 'dJ_first', 'g0', 'rho', 'cond', 'sigma_min_sq', 'eps', 'cfl_product', 'rejections']


class FlowLog(object):
    """
    Records of a flow run, its terminal field and the reason it stopped
    """

    def __init__(self, records, initial_field, terminal_field, termination, constraints, eps, policy, **kwargs):
        assert termination in VALID_TERMINATION_REASONS
        self._records = list(records)
        self._initial_field = initial_field
        self._terminal_field = terminal_field
        self._termination = termination
        self._labels = constraints.labels
        self._targets = constraints.targets
        self._eps = float(eps)
        self._policy = policy
        self._drift_bound = float(kwargs.get('drift_bound', 0.0))
        self._sharp_bound = np.array(kwargs.get('sharp_bound', np.zeros(len(self._labels))), dtype = float)
        self._runtime = float(kwargs.get('runtime', np.nan))

    #### properties ####
    @property
    def records(self):
        return self._records

    @property
    def accepted_records(self):
        return [r for r in self._records if r.accepted]

    @property
    def initial_field(self):
        return self._initial_field

    @property
    def terminal_field(self):
        return self._terminal_field

    @property
    def termination(self):
        return self._termination

    @property
    def failed(self):
        return self._termination in FAILED_TERMINATION_REASONS

    @property
    def labels(self):
        return list(self._labels)

    @property
    def targets(self):
        return np.array(self._targets)

    @property
    def eps(self):
        return self._eps

    @property
    def policy(self):
        return self._policy

    @property
    def runtime(self):
        return self._runtime

    @property
    def n_iterations(self):
        """number of accepted steps"""
        return len(self.accepted_records) - 1

    @property
    def n_rejections(self):
        return sum(1 for r in self._records if not r.accepted)

    @property
    def final_J(self):
        return self.accepted_records[-1].J

    @property
    def drift_pred(self):
        return np.array(self.accepted_records[-1].drift_pred)

    @property
    def drift_bound(self):
        """accumulated eps^2 int g0 ||Gamma_eps^{-1}||_2 ds, an upper bound on every |drift_pred_m|"""
        return self._drift_bound

    @property
    def sharp_bound(self):
        """accumulated int g0 L_m ds per constraint, an upper bound on |drift_pred_m|"""
        return self._sharp_bound

    @property
    def step_sizes(self):
        """accepted step sizes in order"""
        return np.array([r.ds for r in self.accepted_records[1:]])

    def iterations_to(self, target):
        """:return: number of accepted steps until J >= target, or None"""
        for i, r in enumerate(self.accepted_records):
            if r.J >= target:
                return i
        return None

    @property
    def df(self):
        rows = []
        for r in self._records:
            row = {k: getattr(r, k) for k in IterationRecord._fields if k not in ('h', 'drift_pred')}
            for m in range(len(self._labels)):
                row['h_%d' % (m + 1)] = r.h[m]
            for m in range(len(self._labels)):
                row['drift_pred_%d' % (m + 1)] = r.drift_pred[m]
            rows.append(row)
        columns = self.csv_columns + ['pairing', 'inv_norm', 'curvature']
        return pd.DataFrame(rows, columns = columns)

    @property
    def csv_columns(self):
        M = len(self._labels)
        return _CSV_COLUMNS + ['h_%d' % (m + 1) for m in range(M)] + ['drift_pred_%d' % (m + 1) for m in range(M)]

    #### output ####
    def to_csv(self, file_name, **metadata):
        """writes one row per attempt, columns in fixed order"""
        metadata.setdefault('constraints', ','.join(self._labels))
        metadata.setdefault('termination', self._termination)
        return write_csv(self.df[self.csv_columns], file_name, **metadata)

    def to_dict(self):
        return {
            'termination': self._termination,
            'eps': self._eps,
            'policy': self._policy.to_dict(),
            'constraints': self._labels,
            'targets': self._targets.tolist(),
            'n_records': len(self._records),
            'n_iterations': self.n_iterations,
            'n_rejections': self.n_rejections,
            'final_J': self.final_J,
            'drift_pred': self.drift_pred.tolist(),
            'drift_bound': self._drift_bound,
            'sharp_bound': self._sharp_bound.tolist(),
            'runtime': self._runtime,
            }

    def to_json(self, file_name, **metadata):
        info = self.to_dict()
        info.update(metadata)
        return write_json(info, file_name)

    def __len__(self):
        return len(self._records)

    def __repr__(self):
        return 'FlowLog(n_records = %d, termination = %r)' % (len(self._records), self._termination)

    def __str__(self):
        return tabulate_log(self)


def tabulate_log(log, max_rows = 20):
    t = PrettyTable()
    records = log.records
    if len(records) > max_rows:
        records = records[:max_rows // 2] + records[-max_rows // 2:]
    t.add_column('k', [r.k for r in records], align = 'r')
    t.add_column('accepted', [r.accepted for r in records], align = 'c')
    t.add_column('ds', ['%1.2e' % r.ds for r in records], align = 'r')
    t.add_column('J', ['%1.8f' % r.J for r in records], align = 'r')
    t.add_column('cond', ['%1.2e' % r.cond for r in records], align = 'r')
    t.add_column('rho', ['%1.6f' % r.rho for r in records], align = 'r')
    for m, label in enumerate(log.labels):
        t.add_column(label, ['%1.3e' % (r.h[m] - log.targets[m]) for r in records], align = 'r')
    return str(t)


#### flow primitives ####

def velocity(field, envelope, gram, gradients):
    """
    v(t_k) = S(t_k) g0 sum_l x_l c_l(t_k)

    :param field: ControlField at the current iterate
    :param envelope: Envelope
    :param gram: GramData of the current iterate
    :param gradients: list of M + 1 gradient sample vectors (objective first)
    :return: np.array of velocity samples
    """
    n = field.grid.n_points
    assert len(envelope) == n, 'envelope does not match the field grid'
    assert len(gradients) == gram.dim, 'need %d gradients, got %d' % (gram.dim, len(gradients))
    C = np.vstack([parse_samples(c, name = 'gradient %d' % j, n_points = n) for j, c in enumerate(gradients)])
    return envelope.samples * (gram.g0 * gram.x.dot(C))


def cfl_step_bound(G, gram, alpha = DEFAULT_CFL_ALPHA):
    """
    largest step with ds * G * g0 * ||Gamma_eps^{-1}||_2 <= alpha

    :param G: bound on the second variation of J (> 0)
    :param gram: GramData at the current iterate
    :param alpha: CFL number in (0, 2)
    :return: ds_max (inf at a stationary point with g0 = 0)
    """
    if not G > 0.0:
        raise ValueError('curvature bound G must be positive, got %r' % G)
    if not 0.0 < alpha < 2.0:
        raise ValueError('alpha must lie in (0, 2), got %r' % alpha)
    denom = G * gram.g0 * gram.inv_norm
    if gram.g0 == 0.0:
        return np.inf
    return alpha / denom


def _as_objective(objective):
    if isinstance(objective, QuantumSystem):
        return FidelityObjective(objective)
    assert hasattr(objective, 'value') and hasattr(objective, 'evaluate'), 'objective must provide value() and evaluate()'
    return objective


def estimate_curvature(objective, field, direction, h = None, safety = DEFAULT_CURVATURE_SAFETY):
    """
    G = safety * |J[E + h d] - 2 J[E] + J[E - h d]| / h^2 along the unit direction d = direction / ||direction||

    :param objective: QuantumSystem or objective with a value(field) method
    :param field: ControlField
    :param direction: sample vector, usually the current velocity
    :param h: probe scale; defaults to DEFAULT_CURVATURE_PROBE * ||E|| (or DEFAULT_CURVATURE_PROBE if E = 0)
    :param safety: inflation factor >= 1
    :return: G
    """
    objective = _as_objective(objective)
    d = parse_samples(direction, name = 'direction', n_points = field.grid.n_points)
    nrm = np.sqrt(trapezoid(d * d, field.grid.dt))
    if not nrm > 0.0:
        raise ValueError('direction must be nonzero')
    d = d / nrm

    if h is None:
        scale = field.norm()
        h = DEFAULT_CURVATURE_PROBE * (scale if scale > 0.0 else 1.0)

    E = field.samples
    plus = E + h * d
    minus = E - h * d
    if not h > 0.0 or (np.array_equal(plus, E) and np.array_equal(minus, E)):
        raise ValueError('probe scale h = %r underflows against the field' % h)

    J0 = objective.value(field)
    Jp = objective.value(field.with_samples(plus))
    Jm = objective.value(field.with_samples(minus))
    return safety * abs(Jp - 2.0 * J0 + Jm) / h ** 2


#### integrator ####

_FlowPoint = namedtuple('_FlowPoint', ['field', 'J', 'c0', 'gradients', 'h', 'gram', 'v', 'pairing'])


class GradientFlow(object):
    """
    Forward-Euler integrator for the regularised projected gradient flow
    """

    _default_print_flag = False
    _default_check_flag = True
    _default_drift_quadrature = DEFAULT_DRIFT_QUADRATURE
    _valid_drift_quadratures = VALID_DRIFT_QUADRATURES

    def __init__(self, objective, constraints, envelope, eps = DEFAULT_EPS, policy = None, **kwargs):
        """
        :param objective: QuantumSystem or objective with value(field) and evaluate(field) methods
        :param constraints: ConstraintSet
        :param envelope: Envelope
        :param eps: regularisation parameter >= 0
        :param policy: StepPolicy (default: halving with DEFAULT_STEP)

        Optional Keyword Arguments

        :param tolerance: stop when |J^{k+1} - J^k| <= tolerance; None disables the test
        :param max_iter: maximum number of accepted steps
        :param drift_quadrature: 'left' or 'trapezoid' rule for the predicted drift in s
        :param print_flag: set to True to print one line per accepted step
        :param check_flag: set to True to check the first-order identities at every iterate
        """
        assert isinstance(constraints, ConstraintSet), '`constraints` must be a ConstraintSet'
        assert isinstance(envelope, Envelope), '`envelope` must be an Envelope'
        eps = float(eps)
        if not (np.isfinite(eps) and eps >= 0.0):
            raise ValueError('eps must be a finite number >= 0, got %r' % eps)

        self._objective = _as_objective(objective)
        self._constraints = constraints
        self._envelope = envelope
        self._eps = eps
        self._policy = StepPolicy() if policy is None else policy
        assert isinstance(self._policy, StepPolicy)

        tolerance = kwargs.get('tolerance', DEFAULT_TOLERANCE)
        self._tolerance = None if tolerance is None else float(tolerance)
        self._max_iter = int(kwargs.get('max_iter', DEFAULT_MAX_ITER))
        assert self._max_iter >= 0, 'max_iter must be >= 0'
        self.drift_quadrature = kwargs.get('drift_quadrature', self._default_drift_quadrature)
        self.print_flag = kwargs.get('print_flag', self._default_print_flag)
        self.check_flag = kwargs.get('check_flag', self._default_check_flag)

    #### flags ####
    @property
    def print_flag(self):
        return self._print_flag

    @print_flag.setter
    def print_flag(self, flag):
        if flag is None:
            self._print_flag = bool(self._default_print_flag)
        elif isinstance(flag, bool):
            self._print_flag = bool(flag)
        else:
            raise AttributeError('print_flag must be boolean or None')

    @property
    def check_flag(self):
        return self._check_flag

    @check_flag.setter
    def check_flag(self, flag):
        if flag is None:
            self._check_flag = bool(self._default_check_flag)
        elif isinstance(flag, bool):
            self._check_flag = bool(flag)
        else:
            raise AttributeError('check_flag must be boolean or None')

    @property
    def drift_quadrature(self):
        return self._drift_quadrature

    @drift_quadrature.setter
    def drift_quadrature(self, rule):
        if rule not in self._valid_drift_quadratures:
            raise ValueError('drift_quadrature must be one of %r' % self._valid_drift_quadratures)
        self._drift_quadrature = rule

    #### properties ####
    @property
    def objective(self):
        return self._objective

    @property
    def constraints(self):
        return self._constraints

    @property
    def envelope(self):
        return self._envelope

    @property
    def eps(self):
        return self._eps

    @property
    def policy(self):
        return self._policy

    @property
    def tolerance(self):
        return self._tolerance

    @property
    def max_iter(self):
        return self._max_iter

    #### evaluation ####
    def _evaluate(self, field):
        """forward solve, costate, gradients, Gram assembly, regularised solve and velocity at one iterate"""
        ev = self._objective.evaluate(field)
        gradients = [ev.gradient] + self._constraints.gradients(field)
        h = self._constraints.evaluate(field)
        gram = regularize_and_diagnose(assemble(self._envelope, gradients), self._eps)
        v = velocity(field, self._envelope, gram, gradients)
        pairing = trapezoid(ev.gradient * v, field.grid.dt)
        point = _FlowPoint(field = field, J = ev.J, c0 = ev.gradient, gradients = gradients, h = h, gram = gram, v = v, pairing = pairing)
        assert self._check_point(point)
        return point

    def _check_point(self, point):
        if self._check_flag:
            gram = point.gram
            assert gram.rho >= -1e-12 and gram.rho <= 1.0 + 1e-12, 'rho = %r outside [0, 1]' % gram.rho
            assert gram.dJ_firstorder >= -1e-15 * max(1.0, gram.g0), 'negative first-order ascent rate %r' % gram.dJ_firstorder
        return True

    def _record(self, state, point, k, ds, J, h, accepted, rejections, cfl_product, curvature):
        gram = point.gram if point is not None else None
        nan = float('nan')
        return IterationRecord(
            k = k,
            s = state.s_accum,
            accepted = accepted,
            ds = ds,
            J = J,
            dJ_first = gram.dJ_firstorder if gram is not None else nan,
            g0 = gram.g0 if gram is not None else nan,
            rho = gram.rho if gram is not None else nan,
            cond = gram.cond if gram is not None else nan,
            sigma_min_sq = gram.sigma_min_sq if gram is not None else nan,
            eps = self._eps,
            cfl_product = cfl_product,
            rejections = rejections,
            h = np.array(h),
            drift_pred = np.array(state.drift_pred),
            pairing = point.pairing if point is not None else nan,
            inv_norm = gram.inv_norm if gram is not None else nan,
            curvature = nan if curvature is None else curvature,
            )

    def _log(self, records, initial_field, state, termination, start_time):
        return FlowLog(records = records, initial_field = initial_field, terminal_field = state.field,
                       termination = termination, constraints = self._constraints, eps = self._eps,
                       policy = self._policy, drift_bound = state.drift_bound, sharp_bound = state.sharp_bound,
                       runtime = time.process_time() - start_time)

    def _step_size(self, point, ds, curvature):
        """:return: (ds, curvature) for the next attempt"""
        policy = self._policy
        if policy.kind != 'cfl':
            return ds, curvature
        if not np.any(point.v):
            return (policy.ds if np.isfinite(policy.ds) else 0.0), curvature
        if curvature is None:
            if policy.curvature is not None:
                curvature = policy.curvature
            else:
                scale = point.field.norm()
                h = policy.probe * (scale if scale > 0.0 else 1.0)
                curvature = estimate_curvature(self._objective, point.field, point.v, h = h, safety = policy.safety)
        if curvature > 0.0:
            ds = min(policy.ds, cfl_step_bound(curvature, point.gram, policy.alpha))
        else:
            ds = policy.ds
        if not np.isfinite(ds):
            ds = 0.0
        return ds, curvature

    def run(self, initial_field):
        """
        :param initial_field: ControlField on the constraint manifold
        :return: FlowLog
        """
        assert isinstance(initial_field, ControlField)
        start_time = time.process_time()
        policy = self._policy
        M = len(self._constraints)
        state = FlowState(initial_field, M)
        records = []

        try:
            point = self._evaluate(initial_field)
        except FactorizationError as e:
            warnings.warn('numerical issue: %s' % str(e))
            ev_J = self._objective.value(initial_field)
            records.append(self._record(state, None, 0, 0.0, ev_J, self._constraints.evaluate(initial_field), True, 0, np.nan, None))
            return self._log(records, initial_field, state, TERMINATION_FACTORISATION_FAILURE, start_time)

        records.append(self._record(state, point, 0, 0.0, point.J, point.h, True, 0, np.nan, None))
        if self._print_flag:
            print('iteration %d: J = %1.8f, cond = %1.3e' % (0, point.J, point.gram.cond))

        termination = TERMINATION_MAX_ITERATIONS
        ds = policy.ds
        curvature = None
        since_refresh = 0

        for k in range(1, self._max_iter + 1):

            if policy.kind == 'cfl' and policy.curvature is None and since_refresh >= policy.refresh:
                curvature, since_refresh = None, 0
            ds, curvature = self._step_size(point, ds, curvature)
            gram = point.gram

            # attempt the Euler step; rejected attempts reuse the gradients and Gram data of the current iterate
            rejections = 0
            while True:
                cfl_product = ds * curvature * gram.g0 * gram.inv_norm if curvature is not None else np.nan
                trial = point.field.samples + ds * point.v
                if not np.all(np.isfinite(trial)):
                    termination = TERMINATION_NON_FINITE
                    break
                trial_field = point.field.with_samples(trial)
                J_trial = self._objective.value(trial_field)
                if not np.isfinite(J_trial):
                    termination = TERMINATION_NON_FINITE
                    break

                decrease = point.J - J_trial
                within_tolerance = self._tolerance is not None and decrease <= self._tolerance
                if policy.kind == 'halving' and decrease > 0.0 and not within_tolerance:
                    rejections += 1
                    records.append(self._record(state, point, k, ds, J_trial, self._constraints.evaluate(trial_field),
                                                False, rejections, cfl_product, curvature))
                    logger.debug('rejected step %d: ds = %1.3e, J = %1.10f < %1.10f', k, ds, J_trial, point.J)
                    ds = ds * policy.factor
                    if ds < policy.min_ds:
                        termination = TERMINATION_STEP_UNDERFLOW
                        break
                    continue
                break

            if termination != TERMINATION_MAX_ITERATIONS:
                break

            # accept
            rate = gram.drift_rate
            bound_increment = ds * self._eps ** 2 * gram.g0 * gram.inv_norm if self._eps > 0.0 else 0.0
            sharp = gram.sharp_rate
            try:
                new_point = self._evaluate(trial_field)
            except FactorizationError as e:
                warnings.warn('numerical issue: %s' % str(e))
                state.advance(trial_field, ds, ds * rate, bound_increment, ds * sharp)
                records.append(self._record(state, None, k, ds, J_trial, self._constraints.evaluate(trial_field),
                                            True, rejections, cfl_product, curvature))
                termination = TERMINATION_FACTORISATION_FAILURE
                break

            if self._drift_quadrature == 'trapezoid':
                increment = 0.5 * ds * (rate + new_point.gram.drift_rate)
                sharp_increment = 0.5 * ds * (sharp + new_point.gram.sharp_rate)
            else:
                increment = ds * rate
                sharp_increment = ds * sharp
            state.advance(trial_field, ds, increment, bound_increment, sharp_increment)
            records.append(self._record(state, new_point, k, ds, new_point.J, new_point.h, True, rejections, cfl_product, curvature))

            if self._print_flag:
                print('iteration %d: J = %1.8f, ds = %1.2e, cond = %1.3e, rejections = %d' % (k, new_point.J, ds, new_point.gram.cond, rejections))

            dJ = new_point.J - point.J
            point = new_point
            since_refresh += 1
            if self._tolerance is not None and abs(dJ) <= self._tolerance:
                termination = TERMINATION_TOLERANCE
                break

        log = self._log(records, initial_field, state, termination, start_time)
        if self._print_flag:
            print('terminated (%s) after %d iterations in %1.1f seconds' % (termination, log.n_iterations, log.runtime))
        return log


def run(objective, constraints, envelope, initial_field, eps = DEFAULT_EPS, policy = None,
        tolerance = DEFAULT_TOLERANCE, max_iter = DEFAULT_MAX_ITER, **kwargs):
    """
    runs the regularised flow from initial_field

    :param objective: QuantumSystem or objective with value(field) and evaluate(field) methods
    :param constraints: ConstraintSet
    :param envelope: Envelope
    :param initial_field: ControlField
    :param eps: regularisation parameter >= 0
    :param policy: StepPolicy
    :param tolerance: stopping tolerance on |Delta J|; None disables it
    :param max_iter: maximum number of accepted steps
    :param kwargs: passed to GradientFlow (drift_quadrature, print_flag, check_flag)
    :return: FlowLog
    """
    flow = GradientFlow(objective, constraints, envelope, eps = eps, policy = policy,
                        tolerance = tolerance, max_iter = max_iter, **kwargs)
    return flow.run(initial_field)


def drift_report(log, constraints, terminal_field = None):
    """
    :param log: FlowLog
    :param constraints: ConstraintSet used for the run
    :param terminal_field: field to measure; defaults to the terminal field of the log
    :return: pandas.DataFrame indexed by label with columns measured, predicted, residual, relative, bound, sharp_bound
    """
    field = log.terminal_field if terminal_field is None else terminal_field
    measured = constraints.evaluate(field) - constraints.targets
    predicted = log.drift_pred
    targets = constraints.targets
    relative = np.where(targets == 0.0, measured, measured / np.maximum(np.abs(targets), RELATIVE_DRIFT_FLOOR))
    df = pd.DataFrame({'measured': measured,
                       'predicted': predicted,
                       'residual': measured - predicted,
                       'relative': relative,
                       'bound': log.drift_bound,
                       'sharp_bound': log.sharp_bound},
                      index = pd.Index(constraints.labels, name = 'label'))
    return df
