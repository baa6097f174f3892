import pytest
import numpy as np
from gramflow import *
from gramflow.experiments import benchmark_problem, synthetic_problem, quadratic_problem


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: runs a sweep or the benchmark at desk scale')


@pytest.fixture
def rng():
    return np.random.default_rng(1729)


@pytest.fixture(params = [2, 3, 5])
def random_spd(request, rng):
    dim = request.param
    B = rng.standard_normal((dim, dim))
    return B.dot(B.T) + 0.1 * np.eye(dim)


@pytest.fixture
def two_level():
    """resonant two-level system with ground and excited state as initial and target state"""
    return QuantumSystem(H0 = np.diag([-0.5, 0.5]), mu = [[0.0, 1.0], [1.0, 0.0]], psi0 = [1.0, 0.0], psif = [0.0, 1.0])


@pytest.fixture
def two_level_pulse():
    """slowly varying pulse on [0, 10] that is negligible at both ends"""
    def pulse(n_points):
        grid = TimeGrid(0.0, 10.0, n_points)
        t = grid.times
        return ControlField(grid, 0.3 * np.exp(-(t - 5.0) ** 2 / 2.0) * np.cos(t - 5.0))
    return pulse


@pytest.fixture(scope = 'module')
def synthetic():
    return synthetic_problem()


@pytest.fixture(scope = 'module')
def synthetic_fluence():
    return synthetic_problem(fluence = True)


@pytest.fixture(scope = 'module')
def quadratic():
    return quadratic_problem()


@pytest.fixture(scope = 'module')
def benchmark_coarse():
    return build_benchmark(tau_fs = 250.0, n_points = 400)


@pytest.fixture(scope = 'module')
def benchmark_desk():
    return benchmark_problem(tau_fs = 250.0, n_points = 1000)


@pytest.fixture
def run_config():
    """explicit two-level run with an area and a fluence constraint"""
    return {
        'name': 'two_level',
        'system': {'explicit': {'H0': [[-0.5, 0.0], [0.0, 0.5]],
                                'mu': [[0.0, 1.0], [1.0, 0.0]],
                                'psi0': [1.0, 0.0],
                                'psif': [0.0, 1.0]}},
        'grid': {'t_start': 0.0, 't_end': 20.0, 'n_points': 201},
        'field': {'amplitude': 0.1, 'width': 2.5, 'frequency': 1.0},
        'envelope': {'tau': 2.5},
        'constraints': [{'label': 'area', 'kind': 'affine', 'kernel': 'ones'},
                        {'label': 'fluence', 'kind': 'fluence'}],
        'eps': 0.01,
        'policy': {'kind': 'halving', 'ds': 0.01},
        'max_iter': 10,
        }
