# This file contains constants used in gramflow
import numpy as np

### Version ###

__version__ = '1.1.0'
CSV_SCHEMA_VERSION = 2

### Numerical Tolerances ###

HERMITIAN_ATOL = 1e-13          # entries[i][j] vs conj(entries[j][i])
SEMIDEFINITE_RTOL = 1e-12       # eigenvalues below this (relative) count as zero for rank reporting
PIVOT_RTOL = 1e-14              # squared pivot of the equilibrated matrix treated as non-positive
FIDELITY_OVERSHOOT = 1e-12      # J in (1, 1 + overshoot] is clamped to 1
RELATIVE_DRIFT_FLOOR = 1e-30
FEASIBILITY_RTOL = 1e-6

### Units ###

HARTREE_TO_WAVENUMBER = 219474.6313632      # cm^-1 per Hartree
AU_DIPOLE_TO_DEBYE = 2.541746473
AU_TIME_TO_FS = 0.02418884326

def wavenumber_to_au(value):
    return float(value) / HARTREE_TO_WAVENUMBER

def debye_to_au(value):
    return float(value) / AU_DIPOLE_TO_DEBYE

def fs_to_au(value):
    return float(value) / AU_TIME_TO_FS

def au_to_fs(value):
    return float(value) * AU_TIME_TO_FS

### Benchmark ###

BENCHMARK_OMEGA0_CM = 12578.95
BENCHMARK_VDD_CM = 12.35
BENCHMARK_MU_DEBYE = np.sqrt(2.0) * 7.61
BENCHMARK_PULSE_AREA = np.pi / 2.0
BENCHMARK_TAUS_FS = (100.0, 250.0, 400.0)
BENCHMARK_SPAN = 4.0                # grid is [-span * tau, span * tau]
DEFAULT_TAU_FS = 250.0
FULL_SCALE_N_POINTS = 4000
DESK_N_POINTS = 1000

### Objective ###

VALID_GRADIENT_RULES = {'exact', 'pointwise'}
DEFAULT_GRADIENT_RULE = 'exact'

### Constraint Types ###

VALID_CONSTRAINT_KINDS = {'affine', 'fluence'}
VALID_KERNEL_NAMES = {'ones', 'reference_cosine'}
TARGET_FROM_INITIAL_FIELD = 'from-initial-field'

### Step Policies ###

VALID_POLICY_KINDS = {'fixed', 'halving', 'cfl'}
DEFAULT_POLICY_KIND = 'halving'
DEFAULT_STEP = 1e-6
DEFAULT_HALVING_FACTOR = 0.1
DEFAULT_MIN_STEP = 1e-16
DEFAULT_CFL_ALPHA = 1.9
DEFAULT_CURVATURE_SAFETY = 5.0
DEFAULT_CURVATURE_REFRESH = 5
DEFAULT_CURVATURE_PROBE = 1e-3      # probe scale relative to the L2 norm of the field

### Flow ###

DEFAULT_EPS = 0.0
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 500
DESK_MAX_ITER = 100
VALID_DRIFT_QUADRATURES = {'left', 'trapezoid'}
DEFAULT_DRIFT_QUADRATURE = 'left'

TERMINATION_TOLERANCE = 'tolerance'
TERMINATION_MAX_ITERATIONS = 'max_iterations'
TERMINATION_STEP_UNDERFLOW = 'step_underflow'
TERMINATION_FACTORISATION_FAILURE = 'factorisation_failure'
TERMINATION_NON_FINITE = 'non_finite'
VALID_TERMINATION_REASONS = {TERMINATION_TOLERANCE,
                             TERMINATION_MAX_ITERATIONS,
                             TERMINATION_STEP_UNDERFLOW,
                             TERMINATION_FACTORISATION_FAILURE,
                             TERMINATION_NON_FINITE}
FAILED_TERMINATION_REASONS = {TERMINATION_STEP_UNDERFLOW,
                              TERMINATION_FACTORISATION_FAILURE,
                              TERMINATION_NON_FINITE}

### Gram Regimes ###

REGIME_SEPARATION = 10.0
VALID_REGIMES = {'invisible', 'crossover', 'identity'}

### Experiments ###

VALID_EXPERIMENTS = {'baseline', 'converge', 'cond-drift', 'payoff', 'verify', 'fields', 'cfl', 'drift'}
SLOPE_EXPERIMENTS = {'converge', 'cond-drift'}
DEFAULT_COMMON_STEPS = 50
DEFAULT_SWEEP_EPS = tuple(np.logspace(-8, 0, 17))
PAYOFF_STEPS = (1e-6, 5e-6, 1e-5, 5e-5, 1e-4)
PAYOFF_EPS = (0.0, 1e-4, 1e-3, 1e-2)
FINAL_FIELD_EPS = (0.0, 1e-3, 1e-2)
TARGET_FIDELITY = 0.99
BREAKDOWN_MARGIN = 0.01
DEFAULT_SEED = 42
DEFAULT_LEMMA_TRIALS = 1000
DEFAULT_LEMMA_DIM = 4
SHIFT_CHECK_EPS = tuple(10.0 ** np.arange(-8, 1))

### Exit Codes ###

EXIT_SUCCESS = 0
EXIT_NUMERICAL_FAILURE = 1
EXIT_USAGE = 2

### Experiment Problems ###

VALID_PROBLEM_KINDS = {'benchmark', 'synthetic', 'quadratic'}

# two-level problem with two S-orthogonal affine constraints
SYNTHETIC_SPAN = (0.0, 20.0)
SYNTHETIC_N_POINTS = 401
SYNTHETIC_OMEGA = 1.0
SYNTHETIC_WIDTH = 2.5
SYNTHETIC_AMPLITUDE = 0.1

# quadratic toy J = -kappa/2 ||E - E*||^2 with one zero-area constraint
QUADRATIC_SPAN = (0.0, 10.0)
QUADRATIC_N_POINTS = 201
QUADRATIC_WIDTH = 2.0
QUADRATIC_AMPLITUDE = 0.5
QUADRATIC_CURVATURE = 1.0

### Sweep Defaults ###

CONVERGENCE_EPS = (0.0, 1e-13) + tuple(np.logspace(-5, -1, 9))
CONVERGENCE_WINDOW = (1e-5, 1e-1)
CONVERGENCE_STEP = 1e-2
COND_DRIFT_EPS = (0.0,) + tuple(np.logspace(-8, 4, 25))
COND_DRIFT_WINDOW = (1e-1, 1e2)
IDENTITY_EPS = 1e-2
DRIFT_CHECK_EPS = 1.0
DRIFT_CHECK_STEP = 1e-3
DRIFT_CHECK_STEPS = 20
CFL_VIOLATION_FACTOR = 10.0
CFL_CHECK_STEPS = 200
PAIRING_RTOL = 1e-10
AFFINE_DRIFT_ATOL = 1e-6
MIN_WINDOW_POINTS = 4
CONVERGENCE_SLOPE_RANGE = (1.8, 2.2)
# cond(Gamma_eps) - 1 decays like eps^-2 once eps^2 exceeds sigma_min^2
COND_SLOPE_TARGET = -2.0
COND_SLOPE_TOL = 0.3
