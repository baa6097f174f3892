"""
Dense Hermitian / SPD linear algebra and quadrature shared by every module
"""
import numpy as np
from collections import namedtuple
from scipy import linalg
from scipy.linalg import lapack
from gramflow.defaults import HERMITIAN_ATOL, PIVOT_RTOL
from gramflow.errors import SymmetryError, FactorizationError

__all__ = ['EigPair', 'hermitian_defect', 'hermitian_eig', 'spd_solve', 'trapezoid', 'trapezoid_weights',
           'matrix_exponential_step', 'exponential_from_eig', 'exponential_step_derivative']

# values are ascending along the last axis, vectors are stored as columns
EigPair = namedtuple('EigPair', ['values', 'vectors'])


def _dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def hermitian_defect(A):
    """
    :param A: square matrix or stack of square matrices
    :return: max |A - A*| over all entries
    """
    A = np.asarray(A)
    return float(np.max(np.abs(A - _dagger(A)))) if A.size else 0.0


def _check_hermitian(A):
    assert A.ndim >= 2 and A.shape[-1] == A.shape[-2], 'matrix must be square'
    assert A.shape[-1] >= 1, 'matrix must have dim >= 1'
    tol = HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(A))))
    defect = hermitian_defect(A)
    if defect > tol:
        raise SymmetryError(defect, tol)


def hermitian_eig(A, check = True):
    """
    eigendecomposition of a Hermitian matrix, or of a stack of Hermitian matrices with shape (..., d, d)

    :param A: Hermitian matrix
    :param check: set to False to skip the symmetry check (only for matrices that are Hermitian by construction)
    :return: EigPair with ascending eigenvalues and orthonormal eigenvectors as columns
    """
    A = np.asarray(A)
    if check:
        _check_hermitian(A)
    if A.ndim == 2:
        values, vectors = linalg.eigh(A)
    else:
        values, vectors = np.linalg.eigh(A)
    return EigPair(values = values, vectors = vectors)


def spd_solve(A, b, refine = True):
    """
    solves A x = b for a symmetric positive definite matrix A

    A is equilibrated by the inverse square root of its diagonal before the Cholesky factorisation
    and the solution is improved by one step of iterative refinement

    :param A: real symmetric positive definite matrix
    :param b: real vector
    :param refine: set to False to skip iterative refinement
    :return: x

    raises:
        SymmetryError if A is not symmetric
        FactorizationError naming the first non-positive pivot
    """
    A = np.array(A, dtype = float)
    b = np.array(b, dtype = float).flatten()
    assert A.ndim == 2 and A.shape[0] == A.shape[1], 'A must be a square matrix'
    assert len(b) == A.shape[0], 'b must have %d entries' % A.shape[0]
    _check_hermitian(A)

    d = np.diag(A)
    bad = np.flatnonzero(~(d > 0.0))
    if len(bad) > 0:
        raise FactorizationError(pivot = bad[0])

    s = 1.0 / np.sqrt(d)
    As = A * np.outer(s, s)
    c, info = lapack.dpotrf(As, lower = 0, clean = 1)
    if info > 0:
        raise FactorizationError(pivot = info - 1)
    assert info == 0, 'illegal argument passed to dpotrf'

    bad = np.flatnonzero(np.diag(c) ** 2 <= PIVOT_RTOL)
    if len(bad) > 0:
        raise FactorizationError(pivot = bad[0])

    x = s * linalg.cho_solve((c, False), s * b)
    if refine:
        r = b - A.dot(x)
        x = x + s * linalg.cho_solve((c, False), s * r)
    return x


def trapezoid_weights(n_points, dt):
    """
    :return: composite trapezoid weights (dt/2, dt, ..., dt, dt/2)
    """
    assert n_points >= 2, 'need at least 2 points'
    w = np.full(n_points, float(dt))
    w[0] = w[-1] = 0.5 * dt
    return w


def trapezoid(samples, dt):
    """
    composite trapezoid rule on a uniform grid

    :param samples: real samples on the grid
    :param dt: spacing
    :return: integral estimate
    """
    y = np.asarray(samples, dtype = float).flatten()
    if len(y) < 2:
        raise ValueError('trapezoid needs at least 2 samples, got %d' % len(y))
    if not dt > 0.0:
        raise ValueError('dt must be positive')
    return float(np.dot(trapezoid_weights(len(y), dt), y))


def exponential_from_eig(eig, dt):
    """
    :param eig: EigPair of a Hermitian matrix (or stack)
    :return: exp(-i A dt)
    """
    phases = np.exp(-1j * eig.values * dt)
    return np.matmul(eig.vectors * phases[..., np.newaxis, :], _dagger(eig.vectors))


def matrix_exponential_step(A, dt):
    """
    :param A: Hermitian matrix (or stack of matrices)
    :param dt: time step
    :return: unitary exp(-i A dt)
    """
    return exponential_from_eig(hermitian_eig(A), dt)


def exponential_step_derivative(eig, dt, direction):
    """
    derivative of exp(-i A dt) with respect to A in the given direction (Daleckii-Krein formula)

    :param eig: EigPair of A (or a stack)
    :param dt: time step
    :param direction: Hermitian matrix B; broadcast over the stack
    :return: d/dx exp(-i (A + x B) dt) at x = 0
    """
    lam = eig.values
    V = eig.vectors
    f = np.exp(-1j * lam * dt)
    gap = lam[..., :, np.newaxis] - lam[..., np.newaxis, :]
    degenerate = gap == 0.0
    safe_gap = np.where(degenerate, 1.0, gap)

    # divided differences (f_j - f_l) / (lam_j - lam_l), written with expm1 to avoid cancellation
    F = f[..., np.newaxis, :] * np.expm1(-1j * gap * dt) / safe_gap
    F = np.where(degenerate, -1j * dt * f[..., np.newaxis, :], F)

    D = np.matmul(_dagger(V), np.matmul(direction, V))
    return np.matmul(V, np.matmul(F * D, _dagger(V)))
