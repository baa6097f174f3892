"""
S-weighted moving Gram matrix, Tikhonov regularisation and spectral diagnostics
"""
import warnings
import numpy as np
from collections import namedtuple
from gramflow.defaults import SEMIDEFINITE_RTOL, REGIME_SEPARATION, DEFAULT_LEMMA_DIM
from gramflow.errors import FactorizationError
from gramflow.helper_functions import parse_samples
from gramflow.model import TimeGrid
from gramflow.numkit import hermitian_eig, spd_solve

__all__ = ['Envelope', 'GramData', 'build_envelope', 'assemble', 'regularize_and_diagnose', 'inverse_bounds',
           'lemma_suite', 'spectral_shift_check', 'LemmaReport', 'ShiftReport']


class Envelope(object):
    """
    Gating envelope S(t_k) in [0, 1] with S = 0 at both endpoints
    """

    def __init__(self, grid, samples, tau = None):
        assert isinstance(grid, TimeGrid)
        S = parse_samples(samples, name = 'envelope', n_points = grid.n_points)
        if np.any(S < 0.0) or np.any(S > 1.0):
            raise ValueError('envelope samples must lie in [0, 1]')
        if S[0] != 0.0 or S[-1] != 0.0:
            raise ValueError('envelope must vanish at both endpoints')
        S.flags.writeable = False
        self._grid = grid
        self._samples = S
        self._tau = tau

    @property
    def grid(self):
        return self._grid

    @property
    def samples(self):
        return self._samples

    @property
    def tau(self):
        return self._tau

    @property
    def weights(self):
        """S(t_k) times the trapezoid weights"""
        return self._samples * self._grid.weights

    def __len__(self):
        return len(self._samples)

    def __repr__(self):
        return 'Envelope(tau = %r, n_points = %d)' % (self._tau, len(self._samples))


def build_envelope(grid, tau, center = None):
    """
    Gaussian envelope exp(-(t - center)^2 / (2 tau^2)), normalised to peak 1, endpoint samples set to 0

    :param grid: TimeGrid
    :param tau: width (same units as the grid)
    :param center: centre of the Gaussian, defaults to the midpoint of the grid
    :return: Envelope
    """
    if not (np.isfinite(tau) and tau > 0.0):
        raise ValueError('envelope width tau must be positive, got %r' % tau)
    if center is None:
        center = 0.5 * (grid.t_start + grid.t_end)

    S = np.exp(-(grid.times - center) ** 2 / (2.0 * tau ** 2))
    S = S / np.max(S)
    S[0] = 0.0
    S[-1] = 0.0
    return Envelope(grid, S, tau = float(tau))


def assemble(envelope, gradients):
    """
    Gamma_{l,l'} = int S c_l c_l' dt by the trapezoid rule

    only the upper triangle is kept and mirrored so that the result is exactly symmetric

    :param envelope: Envelope
    :param gradients: list of M + 1 sample vectors (objective gradient first)
    :return: (M + 1) x (M + 1) np.array
    """
    n = envelope.grid.n_points
    C = np.vstack([parse_samples(c, name = 'gradient %d' % j, n_points = n) for j, c in enumerate(gradients)])
    G = (C * envelope.weights).dot(C.T)
    return np.triu(G) + np.triu(G, 1).T


class GramData(object):
    """
    Regularised Gram matrix Gamma_eps = Gamma + eps^2 I with its spectrum and the projection solve Gamma_eps x = e_0
    """

    def __init__(self, gamma, eps, x, values):

        self._gamma = gamma
        self._eps = float(eps)
        self._gamma_eps = gamma + self._eps ** 2 * np.eye(gamma.shape[0])
        self._gamma_values = values
        self._x = x
        for a in (self._gamma, self._gamma_eps, self._gamma_values, self._x):
            a.flags.writeable = False

    #### matrices ####
    @property
    def gamma(self):
        return self._gamma

    @property
    def gamma_eps(self):
        return self._gamma_eps

    @property
    def eps(self):
        return self._eps

    @property
    def dim(self):
        return self._gamma.shape[0]

    @property
    def x(self):
        return self._x

    #### spectrum ####
    @property
    def eigenvalues(self):
        """eigenvalues of Gamma_eps, shifted analytically from those of Gamma"""
        return self._gamma_values + self._eps ** 2

    @property
    def sigma_min_sq(self):
        """smallest eigenvalue of Gamma (may be a tiny negative from round-off)"""
        return float(self._gamma_values[0])

    @property
    def sigma_max_sq(self):
        return float(self._gamma_values[-1])

    @property
    def inv_norm(self):
        """||Gamma_eps^{-1}||_2 = 1 / (sigma_min^2 + eps^2)"""
        denom = max(self.sigma_min_sq, 0.0) + self._eps ** 2
        return np.inf if denom == 0.0 else 1.0 / denom

    @property
    def cond(self):
        """(sigma_max^2 + eps^2) / (sigma_min^2 + eps^2)"""
        denom = max(self.sigma_min_sq, 0.0) + self._eps ** 2
        numer = max(self.sigma_max_sq, 0.0) + self._eps ** 2
        if denom == 0.0:
            return np.inf if numer > 0.0 else 1.0
        return numer / denom

    @property
    def rank(self):
        scale = max(abs(self.sigma_max_sq), np.finfo(float).tiny)
        return int(np.sum(self._gamma_values > SEMIDEFINITE_RTOL * scale))

    @property
    def regime(self):
        """'invisible' if eps << sigma_min, 'identity' if eps >> sigma_max, 'crossover' otherwise"""
        eps_sq = self._eps ** 2
        sep_sq = REGIME_SEPARATION ** 2
        if eps_sq * sep_sq <= max(self.sigma_min_sq, 0.0):
            return 'invisible'
        if eps_sq >= sep_sq * max(self.sigma_max_sq, 0.0):
            return 'identity'
        return 'crossover'

    #### projection ####
    @property
    def g0(self):
        return float(self._gamma[0, 0])

    @property
    def rho(self):
        """1 - eps^2 [Gamma_eps^{-1}]_00"""
        return float(1.0 - self._eps ** 2 * self._x[0])

    @property
    def dJ_firstorder(self):
        return self.g0 * self.rho

    @property
    def drift_rate(self):
        """-eps^2 g0 [Gamma_eps^{-1}]_{m0} for m = 1, ..., M"""
        return -self._eps ** 2 * self.g0 * self._x[1:]

    @property
    def sharp_rate(self):
        """g0 L_m with L_m = (Gamma_mm Gamma_00)^{1/2} / (sigma_min^2 + eps^2), an upper bound on |drift_rate_m|"""
        if self._eps == 0.0:
            return np.zeros(self.dim - 1)
        diag = np.maximum(np.diag(self._gamma)[1:], 0.0)
        return self.g0 * np.sqrt(diag * max(self.g0, 0.0)) * self.inv_norm

    def __repr__(self):
        return 'GramData(dim = %d, eps = %1.2e, cond = %1.3e, g0 = %1.3e, rho = %1.6f)' % (self.dim, self._eps, self.cond, self.g0, self.rho)


def regularize_and_diagnose(gamma, eps):
    """
    :param gamma: symmetric positive semidefinite Gram matrix from assemble
    :param eps: regularisation parameter >= 0
    :return: GramData

    raises:
        FactorizationError with the sigma_min^2 report if Gamma_eps is not numerically positive definite
    """
    gamma = np.array(gamma, dtype = float)
    assert gamma.ndim == 2 and gamma.shape[0] == gamma.shape[1] and gamma.shape[0] >= 1
    eps = float(eps)
    if not (np.isfinite(eps) and eps >= 0.0):
        raise ValueError('eps must be a finite number >= 0, got %r' % eps)

    values = hermitian_eig(gamma).values
    scale = max(abs(values[-1]), np.finfo(float).tiny)
    if values[0] < -SEMIDEFINITE_RTOL * scale:
        warnings.warn('numerical issue: Gram matrix has eigenvalue %1.3e below the semidefinite tolerance' % values[0])

    e0 = np.zeros(gamma.shape[0])
    e0[0] = 1.0
    if gamma[0, 0] == 0.0 and eps == 0.0:
        # stationary point: the objective row of Gamma vanishes and the velocity is zero for any x
        return GramData(gamma, eps, np.zeros(gamma.shape[0]), values)
    try:
        x = spd_solve(gamma + eps ** 2 * np.eye(gamma.shape[0]), e0)
    except FactorizationError as e:
        raise FactorizationError(pivot = e.pivot, sigma_min_sq = float(values[0])) from e

    return GramData(gamma, eps, x, values)


#### diagnostics on random SPD matrices ####

LemmaReport = namedtuple('LemmaReport', ['n_trials', 'n_violations', 'worst_lower_margin', 'worst_upper_margin', 'worst_cs_margin'])
ShiftReport = namedtuple('ShiftReport', ['n_trials', 'n_checks', 'n_violations', 'worst_error'])


def _random_spd(rng, dim):
    B = rng.standard_normal((dim, dim))
    return B.dot(B.T) / dim


def inverse_bounds(gamma, eps):
    """
    diagonal bounds 1/(Gamma_kk + eps^2) <= [Gamma_eps^{-1}]_kk <= 1/(sigma_min^2 + eps^2)

    :return: (lower, diagonal, upper, inverse) with lower/diagonal arrays and upper a float
    """
    gamma = np.asarray(gamma, dtype = float)
    A_inv = np.linalg.inv(gamma + eps ** 2 * np.eye(gamma.shape[0]))
    sigma_min_sq = max(np.linalg.eigvalsh(gamma)[0], 0.0)
    lower = 1.0 / (np.diag(gamma) + eps ** 2)
    upper = 1.0 / (sigma_min_sq + eps ** 2)
    return lower, np.diag(A_inv), upper, A_inv


def lemma_suite(n_trials, dim = DEFAULT_LEMMA_DIM, seed = None, tol = 1e-12):
    """
    checks the diagonal bounds of Gamma_eps^{-1} and the Cauchy-Schwarz bound on its off-diagonal entries
    for random SPD Gamma and random eps in [1e-2, 1]

    margins are relative slacks; a margin below -tol counts as a violation

    :return: LemmaReport
    """
    assert n_trials >= 1
    rng = np.random.default_rng(seed)
    n_violations = 0
    worst = np.array([np.inf, np.inf, np.inf])

    for _ in range(n_trials):
        gamma = _random_spd(rng, dim)
        eps = 10.0 ** rng.uniform(-2.0, 0.0)
        lower, diag, upper, A_inv = inverse_bounds(gamma, eps)

        lower_margin = np.min((diag - lower) / diag)
        upper_margin = np.min((upper - diag) / upper)
        bound = np.sqrt(np.outer(diag, diag))
        off = ~np.eye(dim, dtype = bool)
        cs_margin = np.min(((bound - np.abs(A_inv)) / bound)[off]) if dim > 1 else np.inf

        margins = np.array([lower_margin, upper_margin, cs_margin])
        n_violations += int(np.any(margins < -tol))
        worst = np.minimum(worst, margins)

    return LemmaReport(n_trials = n_trials, n_violations = n_violations, worst_lower_margin = float(worst[0]),
                       worst_upper_margin = float(worst[1]), worst_cs_margin = float(worst[2]))


def spectral_shift_check(n_trials, dim = DEFAULT_LEMMA_DIM, seed = None, eps_values = (1e-8, 1e-4, 1e-2, 1.0), tol = 1e-12):
    """
    compares the measured spectrum of Gamma + eps^2 I with the spectrum of Gamma shifted by eps^2

    :return: ShiftReport; the error of each check is relative to the largest shifted eigenvalue
    """
    assert n_trials >= 1
    rng = np.random.default_rng(seed)
    n_checks, n_violations, worst = 0, 0, 0.0
    for _ in range(n_trials):
        gamma = _random_spd(rng, dim)
        base = hermitian_eig(gamma).values
        for eps in eps_values:
            shifted = hermitian_eig(gamma + eps ** 2 * np.eye(dim)).values
            expected = base + eps ** 2
            err = float(np.max(np.abs(shifted - expected)) / np.max(np.abs(expected)))
            n_checks += 1
            n_violations += int(err > tol)
            worst = max(worst, err)
    return ShiftReport(n_trials = n_trials, n_checks = n_checks, n_violations = n_violations, worst_error = worst)
