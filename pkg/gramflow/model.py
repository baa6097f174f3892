"""
Bilinear control problem i dU/dt = (H0 - mu E(t)) U with terminal fidelity objective
"""
import warnings
import numpy as np
import pandas as pd
from collections import namedtuple
from gramflow.defaults import *
from gramflow.errors import GridMismatchError, SymmetryError
from gramflow.helper_functions import parse_samples, parse_matrix, parse_state
from gramflow.numkit import hermitian_defect, hermitian_eig, exponential_from_eig, exponential_step_derivative, trapezoid, trapezoid_weights

__all__ = ['TimeGrid', 'ControlField', 'QuantumSystem', 'StateTrajectory', 'BenchmarkParams', 'Benchmark', 'Evaluation',
           'FidelityObjective', 'build_benchmark', 'propagate', 'fidelity', 'overlap', 'costate', 'objective_gradient', 'time_reverse']


class TimeGrid(object):
    """
    Uniform grid t_k = t_start + k * dt, k = 0, ..., n_points - 1
    """

    def __init__(self, t_start, t_end, n_points):

        n_points = int(n_points)
        if n_points < 2:
            raise ValueError('grid needs n_points >= 2, got %d' % n_points)
        t_start, t_end = float(t_start), float(t_end)
        if not (np.isfinite(t_start) and np.isfinite(t_end) and t_end > t_start):
            raise ValueError('grid needs finite t_start < t_end')

        self._t_start = t_start
        self._t_end = t_end
        self._n_points = n_points
        self._times = np.linspace(t_start, t_end, n_points)
        self._times.flags.writeable = False

    @property
    def t_start(self):
        return self._t_start

    @property
    def t_end(self):
        return self._t_end

    @property
    def n_points(self):
        return self._n_points

    @property
    def dt(self):
        return (self._t_end - self._t_start) / (self._n_points - 1)

    @property
    def duration(self):
        return self._t_end - self._t_start

    @property
    def times(self):
        return self._times

    @property
    def weights(self):
        """trapezoid quadrature weights (including dt)"""
        return trapezoid_weights(self._n_points, self.dt)

    def refine(self):
        """:return: grid on the same span with half the spacing"""
        return TimeGrid(self._t_start, self._t_end, 2 * self._n_points - 1)

    def __len__(self):
        return self._n_points

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and (self._t_start, self._t_end, self._n_points) == (other._t_start, other._t_end, other._n_points)

    def __hash__(self):
        return hash((self._t_start, self._t_end, self._n_points))

    def __repr__(self):
        return 'TimeGrid(t_start = %r, t_end = %r, n_points = %d)' % (self._t_start, self._t_end, self._n_points)


class ControlField(object):
    """
    Real field samples E(t_k) on a TimeGrid
    """

    def __init__(self, grid, samples):
        assert isinstance(grid, TimeGrid), '`grid` must be a TimeGrid'
        self._grid = grid
        self._samples = parse_samples(samples, name = 'field samples', n_points = grid.n_points)
        self._samples.flags.writeable = False

    @property
    def grid(self):
        return self._grid

    @property
    def samples(self):
        return self._samples

    @property
    def times(self):
        return self._grid.times

    def with_samples(self, samples):
        return ControlField(self._grid, samples)

    def inner(self, other):
        """trapezoid inner product with another field (or sample vector) on the same grid"""
        y = other.samples if isinstance(other, ControlField) else np.asarray(other, dtype = float)
        if len(y) != self._grid.n_points:
            raise GridMismatchError('fields are defined on different grids')
        return trapezoid(self._samples * y, self._grid.dt)

    def norm(self):
        """trapezoid L2 norm"""
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def distance(self, other):
        """trapezoid L2 distance to another field on the same grid"""
        if not isinstance(other, ControlField) or other.grid != self._grid:
            raise GridMismatchError('fields are defined on different grids')
        d = self._samples - other.samples
        return float(np.sqrt(trapezoid(d * d, self._grid.dt)))

    @property
    def df(self):
        return pd.DataFrame({'t': self._grid.times, 'E': self._samples})

    def __len__(self):
        return self._grid.n_points

    def __repr__(self):
        return 'ControlField(n_points = %d, max|E| = %1.3e)' % (self._grid.n_points, np.max(np.abs(self._samples)))


class QuantumSystem(object):
    """
    Drift Hamiltonian H0, control operator mu, initial state psi0 and target state psif
    """

    _default_check_flag = True

    def __init__(self, H0, mu, psi0, psif, **kwargs):

        self._H0 = parse_matrix(H0, name = 'H0').astype(complex)
        self._mu = parse_matrix(mu, name = 'mu').astype(complex)
        self._psi0 = parse_state(psi0, name = 'psi0')
        self._psif = parse_state(psif, name = 'psif')
        self.check_flag = kwargs.get('check_flag', self._default_check_flag)

        for name, A in (('H0', self._H0), ('mu', self._mu)):
            defect = hermitian_defect(A)
            tol = HERMITIAN_ATOL * max(1.0, np.max(np.abs(A)))
            if defect > tol:
                raise SymmetryError(defect, tol)

        d = self._H0.shape[0]
        if d < 2:
            raise ValueError('system dimension must be at least 2')
        if self._mu.shape[0] != d or len(self._psi0) != d or len(self._psif) != d:
            raise ValueError('H0, mu, psi0 and psif must share dimension %d' % d)

        for A in (self._H0, self._mu, self._psi0, self._psif):
            A.flags.writeable = False

        assert self._check_rep()

    def _check_rep(self):
        if self._check_flag:
            assert np.isclose(np.linalg.norm(self._psi0), 1.0, atol = 1e-12)
            assert np.isclose(np.linalg.norm(self._psif), 1.0, atol = 1e-12)
            assert self._H0.shape == self._mu.shape == (self.dim, self.dim)
        return True

    #### properties ####
    @property
    def check_flag(self):
        return bool(self._check_flag)

    @check_flag.setter
    def check_flag(self, flag):
        assert isinstance(flag, bool)
        self._check_flag = bool(flag)

    @property
    def dim(self):
        return self._H0.shape[0]

    @property
    def H0(self):
        return self._H0

    @property
    def mu(self):
        return self._mu

    @property
    def psi0(self):
        return self._psi0

    @property
    def psif(self):
        return self._psif

    def generators(self, samples):
        """:return: stack of slice generators H0 - mu E_k for each sample"""
        E = np.asarray(samples, dtype = float)
        return self._H0[np.newaxis, :, :] - E[:, np.newaxis, np.newaxis] * self._mu[np.newaxis, :, :]

    def __repr__(self):
        return 'QuantumSystem(dim = %d)' % self.dim


class StateTrajectory(object):
    """
    Propagators U(t_k) and states psi(t_k) = U(t_k) psi0 on a grid, plus the slice eigendecompositions used to build them
    """

    def __init__(self, grid, propagators, states, slices):
        self._grid = grid
        self._propagators = propagators
        self._states = states
        self._slices = slices

    @property
    def grid(self):
        return self._grid

    @property
    def propagators(self):
        return self._propagators

    @property
    def states(self):
        return self._states

    @property
    def slices(self):
        """EigPair stack of the slice generators H0 - mu E(t_k), k = 0, ..., N - 2"""
        return self._slices

    @property
    def final_state(self):
        return self._states[-1]

    @property
    def final_propagator(self):
        return self._propagators[-1]

    def unitarity_defect(self):
        """:return: max over k of ||U(t_k)* U(t_k) - I||_F"""
        U = self._propagators
        d = U.shape[-1]
        G = np.matmul(np.conj(np.swapaxes(U, -1, -2)), U) - np.eye(d)[np.newaxis]
        return float(np.max(np.linalg.norm(G, axis = (1, 2))))

    def __len__(self):
        return len(self._states)


#### propagation ####

def propagate(system, field):
    """
    propagates the Schrodinger equation with the left-endpoint slice rule
    U(t_{k+1}) = exp(-i (H0 - mu E(t_k)) dt) U(t_k), U(t_0) = I

    :param system: QuantumSystem
    :param field: ControlField
    :return: StateTrajectory
    """
    assert isinstance(system, QuantumSystem), '`system` must be a QuantumSystem'
    assert isinstance(field, ControlField), '`field` must be a ControlField'

    grid = field.grid
    slices = hermitian_eig(system.generators(field.samples[:-1]), check = False)
    steps = exponential_from_eig(slices, grid.dt)

    U = np.empty((grid.n_points, system.dim, system.dim), dtype = complex)
    U[0] = np.eye(system.dim)
    for k in range(grid.n_points - 1):
        U[k + 1] = steps[k].dot(U[k])

    states = U.dot(system.psi0)
    return StateTrajectory(grid, U, states, slices)


def overlap(system, trajectory):
    """:return: <psif, psi(T)>"""
    return complex(np.vdot(system.psif, trajectory.final_state))


def fidelity(system, trajectory):
    """
    :return: J = |<psif, U(T) psi0>|^2
    """
    J = abs(overlap(system, trajectory)) ** 2
    if J > 1.0:
        if J > 1.0 + FIDELITY_OVERSHOOT:
            warnings.warn('numerical issue: fidelity %1.15f exceeds 1 beyond overshoot tolerance' % J)
        J = 1.0
    return float(J)


def costate(system, field, trajectory):
    """
    lambda(t_k) = U(t_k) U(T)* |psif><psif| U(T) psi0, built from the stored propagators

    :return: array of shape (n_points, dim)
    """
    assert len(trajectory) == field.grid.n_points, 'trajectory does not match the field grid'
    a = overlap(system, trajectory)
    w = np.conj(trajectory.final_propagator.T).dot(system.psif) * a
    return trajectory.propagators.dot(w)


def objective_gradient(system, field, trajectory = None, rule = DEFAULT_GRADIENT_RULE):
    """
    samples c0(t_k) of the functional derivative of J

    rule = 'exact' differentiates the discretised objective: c0_k = (dJ/dE_k) / (dt w_k) with w_k the trapezoid weight,
    so that the trapezoid pairing of c0 with any perturbation is the exact first variation of the discrete J.
    The final sample does not enter the left-endpoint propagation and its gradient is 0.

    rule = 'pointwise' evaluates -2 Im <lambda(t_k), mu psi(t_k)>, the dt -> 0 limit of the exact rule.

    :param system: QuantumSystem
    :param field: ControlField
    :param trajectory: StateTrajectory of (system, field), recomputed if None
    :param rule: 'exact' or 'pointwise'
    :return: np.array with n_points samples
    """
    assert rule in VALID_GRADIENT_RULES, 'rule must be one of %r' % VALID_GRADIENT_RULES
    if trajectory is None:
        trajectory = propagate(system, field)

    lam = costate(system, field, trajectory)
    psi = trajectory.states

    if rule == 'pointwise':
        return -2.0 * np.imag(np.einsum('ki,ij,kj->k', np.conj(lam), system.mu, psi))

    grid = field.grid
    dU = exponential_step_derivative(trajectory.slices, grid.dt, -system.mu)
    dJ = 2.0 * np.real(np.einsum('ki,kij,kj->k', np.conj(lam[1:]), dU, psi[:-1]))

    c0 = np.zeros(grid.n_points)
    c0[:-1] = dJ / grid.weights[:-1]
    return c0


def time_reverse(system, field, trajectory):
    """
    undoes the recorded evolution slice by slice with exp(+i (H0 - mu E(t_k)) dt)
    :return: state recovered at t_0 (equals psi0 up to round-off)
    """
    back = exponential_from_eig(trajectory.slices, -field.grid.dt)
    psi = np.array(trajectory.final_state)
    for k in reversed(range(field.grid.n_points - 1)):
        psi = back[k].dot(psi)
    return psi


#### objective ####

Evaluation = namedtuple('Evaluation', ['J', 'gradient', 'trajectory'])


class FidelityObjective(object):
    """
    Terminal fidelity J[E] of a QuantumSystem, with its gradient
    """

    def __init__(self, system, gradient_rule = DEFAULT_GRADIENT_RULE):
        assert isinstance(system, QuantumSystem)
        assert gradient_rule in VALID_GRADIENT_RULES
        self._system = system
        self._gradient_rule = gradient_rule

    @property
    def system(self):
        return self._system

    @property
    def gradient_rule(self):
        return self._gradient_rule

    def value(self, field):
        return fidelity(self._system, propagate(self._system, field))

    def gradient(self, field):
        return self.evaluate(field).gradient

    def evaluate(self, field):
        trajectory = propagate(self._system, field)
        J = fidelity(self._system, trajectory)
        c0 = objective_gradient(self._system, field, trajectory, rule = self._gradient_rule)
        return Evaluation(J = J, gradient = c0, trajectory = trajectory)

    def __repr__(self):
        return 'FidelityObjective(%r, gradient_rule = %r)' % (self._system, self._gradient_rule)


#### benchmark ####

class BenchmarkParams(object):
    """
    Three-level ladder benchmark; stores laboratory inputs and exposes atomic-unit values
    """

    def __init__(self, tau_fs = DEFAULT_TAU_FS, omega0_cm = BENCHMARK_OMEGA0_CM, vdd_cm = BENCHMARK_VDD_CM,
                 mu_debye = BENCHMARK_MU_DEBYE, theta_sg = BENCHMARK_PULSE_AREA):

        values = {'tau_fs': tau_fs, 'omega0_cm': omega0_cm, 'vdd_cm': vdd_cm, 'mu_debye': mu_debye, 'theta_sg': theta_sg}
        for name, v in values.items():
            if not (np.isfinite(v) and v > 0.0):
                raise ValueError('`%s` must be positive, got %r' % (name, v))

        self._tau_fs = float(tau_fs)
        self._omega0_cm = float(omega0_cm)
        self._vdd_cm = float(vdd_cm)
        self._mu_debye = float(mu_debye)
        self._theta_sg = float(theta_sg)

    @property
    def tau_fs(self):
        return self._tau_fs

    @property
    def tau(self):
        return fs_to_au(self._tau_fs)

    @property
    def omega0(self):
        return wavenumber_to_au(self._omega0_cm)

    @property
    def vdd(self):
        return wavenumber_to_au(self._vdd_cm)

    @property
    def mu_d(self):
        return debye_to_au(self._mu_debye)

    @property
    def theta_sg(self):
        return self._theta_sg

    @property
    def omega_r(self):
        return 0.5 * self.omega0 + self.vdd

    @property
    def amplitude(self):
        """field amplitude A with mu_d * int A exp(-t^2 / 2 tau^2) dt = theta_sg"""
        return self._theta_sg / (self.mu_d * np.sqrt(2.0 * np.pi) * self.tau)

    def to_dict(self, atomic_units = False):
        if atomic_units:
            return {'tau': self.tau, 'omega0': self.omega0, 'vdd': self.vdd, 'mu_d': self.mu_d,
                    'theta_sg': self._theta_sg, 'omega_r': self.omega_r, 'amplitude': self.amplitude}
        return {'tau_fs': self._tau_fs, 'omega0_cm': self._omega0_cm, 'vdd_cm': self._vdd_cm,
                'mu_debye': self._mu_debye, 'theta_sg': self._theta_sg}

    def __eq__(self, other):
        return isinstance(other, BenchmarkParams) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return 'BenchmarkParams(%s)' % ', '.join('%s = %r' % kv for kv in self.to_dict().items())


Benchmark = namedtuple('Benchmark', ['system', 'grid', 'field', 'fluence_target', 'reference_target', 'params'])


def build_benchmark(tau_fs = DEFAULT_TAU_FS, n_points = FULL_SCALE_N_POINTS, **kwargs):
    """
    three-level ladder driven through its middle level by a transform-limited Gaussian pulse

    :param tau_fs: pulse duration in fs
    :param n_points: number of grid points on [-4 tau, 4 tau]
    :param kwargs: overrides passed to BenchmarkParams (omega0_cm, vdd_cm, mu_debye, theta_sg)
    :return: Benchmark(system, grid, field, fluence_target, reference_target, params), all in atomic units
    """
    params = BenchmarkParams(tau_fs = tau_fs, **kwargs)

    H0 = np.diag([-0.5 * params.omega0, params.vdd, 0.5 * params.omega0])
    mu = params.mu_d * np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    system = QuantumSystem(H0 = H0, mu = mu, psi0 = [1.0, 0.0, 0.0], psif = [0.0, 1.0, 0.0])

    span = BENCHMARK_SPAN * params.tau
    grid = TimeGrid(-span, span, n_points)
    t = grid.times
    E = params.amplitude * np.exp(-t ** 2 / (2.0 * params.tau ** 2)) * np.cos(params.omega_r * t)
    field = ControlField(grid, E)

    fluence_target = trapezoid(E * E, grid.dt)
    reference_target = trapezoid(params.mu_d * np.cos(params.omega_r * t) * E, grid.dt)
    return Benchmark(system = system, grid = grid, field = field, fluence_target = fluence_target,
                     reference_target = reference_target, params = params)
