# Test Strategy
# --------------------------------------------------------
# hermitian_eig:                diagonal, Pauli x, random, stacked, non-Hermitian input
# spd_solve:                    identity, diagonal, random SPD, rank deficient, zero diagonal
# trapezoid:                    constants, linear, smooth integrand, too few samples
# exponential_step_derivative:  finite differences, fully degenerate generator

import pytest
import numpy as np
from gramflow.errors import SymmetryError, FactorizationError
from gramflow.numkit import *


def _random_hermitian(rng, dim):
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (A + np.conj(A.T))


#### eigendecomposition ####

def test_hermitian_eig_diagonal():
    eig = hermitian_eig(np.diag([2.0, -1.0]))
    assert np.allclose(eig.values, [-1.0, 2.0])
    assert np.allclose(np.abs(eig.vectors), [[0.0, 1.0], [1.0, 0.0]])


def test_hermitian_eig_pauli_x():
    eig = hermitian_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(eig.values, [-1.0, 1.0])


@pytest.mark.parametrize("dim", [2, 3, 6])
def test_hermitian_eig_reconstructs(rng, dim):
    A = _random_hermitian(rng, dim)
    eig = hermitian_eig(A)
    B = eig.vectors.dot(np.diag(eig.values)).dot(np.conj(eig.vectors.T))
    assert np.max(np.abs(A - B)) <= 1e-11 * np.max(np.abs(A))
    assert np.all(np.diff(eig.values) >= 0.0)


def test_hermitian_eig_stack(rng):
    stack = np.array([_random_hermitian(rng, 3) for _ in range(4)])
    eig = hermitian_eig(stack)
    assert eig.values.shape == (4, 3)
    for k in range(4):
        assert np.allclose(eig.values[k], np.linalg.eigvalsh(stack[k]))


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(SymmetryError) as info:
        hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert info.value.defect == 1.0


def test_hermitian_defect_of_hermitian_matrix(rng):
    assert hermitian_defect(_random_hermitian(rng, 4)) == 0.0


#### SPD solves ####

def test_spd_solve_identity():
    b = np.array([1.0, -2.0, 3.0])
    assert np.allclose(spd_solve(np.eye(3), b), b)


def test_spd_solve_diagonal():
    x = spd_solve(np.diag([4.0, 1.0]), [1.0, 1.0])
    assert np.allclose(x, [0.25, 1.0], rtol = 1e-14)


def test_spd_solve_random(random_spd, rng):
    b = rng.standard_normal(random_spd.shape[0])
    x = spd_solve(random_spd, b)
    assert np.linalg.norm(random_spd.dot(x) - b) <= 1e-10 * np.linalg.norm(b)


def test_spd_solve_rank_deficient():
    with pytest.raises(FactorizationError) as info:
        spd_solve(np.array([[1.0, 1.0], [1.0, 1.0]]), [1.0, 0.0])
    assert info.value.pivot == 1


def test_spd_solve_zero_diagonal():
    with pytest.raises(FactorizationError) as info:
        spd_solve(np.diag([1.0, 0.0, 2.0]), [1.0, 0.0, 0.0])
    assert info.value.pivot == 1


def test_spd_solve_rejects_asymmetric():
    with pytest.raises(SymmetryError):
        spd_solve(np.array([[2.0, 1.0], [0.0, 2.0]]), [1.0, 0.0])


#### quadrature ####

@pytest.mark.parametrize("samples, dt, expected", [
    ([1.0, 1.0, 1.0], 0.5, 1.0),
    ([0.0, 1.0, 2.0], 1.0, 2.0),
    ([3.0, 3.0], 2.0, 6.0),
    ])
def test_trapezoid_examples(samples, dt, expected):
    assert np.isclose(trapezoid(samples, dt), expected, rtol = 1e-15)


def test_trapezoid_sine():
    t = np.linspace(0.0, np.pi, 4000)
    assert abs(trapezoid(np.sin(t), t[1] - t[0]) - 2.0) <= 1e-6


def test_trapezoid_is_linear(rng):
    a, b = rng.standard_normal(50), rng.standard_normal(50)
    assert np.isclose(trapezoid(2.0 * a - b, 0.1), 2.0 * trapezoid(a, 0.1) - trapezoid(b, 0.1), atol = 1e-14)


@pytest.mark.parametrize("samples, dt", [([1.0], 1.0), ([], 1.0), ([1.0, 2.0], 0.0)])
def test_trapezoid_rejects_bad_input(samples, dt):
    with pytest.raises(ValueError):
        trapezoid(samples, dt)


def test_trapezoid_weights():
    assert np.array_equal(trapezoid_weights(4, 2.0), [1.0, 2.0, 2.0, 1.0])


#### exponentials ####

def test_exponential_of_zero():
    assert np.allclose(matrix_exponential_step(np.zeros((3, 3)), 0.7), np.eye(3))


def test_exponential_of_diagonal():
    U = matrix_exponential_step(np.diag([1.0, -2.0]), 0.3)
    assert np.allclose(U, np.diag(np.exp(-1j * np.array([1.0, -2.0]) * 0.3)))


def test_exponential_is_unitary(rng):
    U = matrix_exponential_step(_random_hermitian(rng, 4), 1.3)
    assert np.allclose(np.conj(U.T).dot(U), np.eye(4), atol = 1e-12)


@pytest.mark.parametrize("dt", [0.1, 0.7, 2.5])
def test_exponential_step_derivative_finite_difference(rng, dt):
    A = _random_hermitian(rng, 3)
    B = _random_hermitian(rng, 3)
    x = 1e-6
    fd = (matrix_exponential_step(A + x * B, dt) - matrix_exponential_step(A - x * B, dt)) / (2.0 * x)
    D = exponential_step_derivative(hermitian_eig(A), dt, B)
    assert np.max(np.abs(D - fd)) <= 1e-7


def test_exponential_step_derivative_degenerate(rng):
    dt = 0.4
    B = _random_hermitian(rng, 3)
    D = exponential_step_derivative(hermitian_eig(2.0 * np.eye(3)), dt, B)
    assert np.allclose(D, -1j * dt * np.exp(-2j * dt) * B, atol = 1e-14)
