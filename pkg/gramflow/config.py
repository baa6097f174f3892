"""
Run and sweep configurations, read from YAML or JSON files
"""
import json
import yaml
import numpy as np
from pathlib import Path
from gramflow.defaults import *
from gramflow.errors import ConfigError, FeasibilityError
from gramflow.helper_functions import config_hash, parse_matrix
from gramflow.paths import results_dir
from gramflow.model import TimeGrid, ControlField, QuantumSystem, FidelityObjective, BenchmarkParams, build_benchmark
from gramflow.constraints import Constraint, ConstraintSet
from gramflow.gram import build_envelope
from gramflow.flow import Problem, StepPolicy

__all__ = ['RunConfig', 'SweepSpec', 'load_file']

VALID_OUTPUT_FORMATS = {'csv', 'json'}
VALID_UNITS = {'atomic', 'laboratory'}


def load_file(file_name):
    """
    :param file_name: path to a .yaml/.yml or .json file
    :return: dict
    """
    file_name = Path(file_name)
    if not file_name.exists():
        raise FileNotFoundError('config file %s does not exist' % file_name)
    with open(file_name, 'r') as f:
        if file_name.suffix.lower() == '.json':
            try:
                d = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError('<file>', 'invalid JSON (%s)' % e)
        else:
            try:
                d = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError('<file>', 'invalid YAML (%s)' % e)
    if d is None:
        d = {}
    if not isinstance(d, dict):
        raise ConfigError('<root>', 'config must be a mapping')
    return d


#### value parsing ####

def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        raise ConfigError(path, 'expected a mapping')
    unknown = sorted(set(d.keys()) - set(allowed))
    if len(unknown) > 0:
        key = unknown[0] if path == '' else '%s.%s' % (path, unknown[0])
        raise ConfigError(key, 'unknown key')


def _float(value, key, positive = False, nonnegative = False):
    if isinstance(value, bool):
        raise ConfigError(key, 'expected a number, got %r' % value)
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, 'expected a number, got %r' % (value,))
    if not np.isfinite(x):
        raise ConfigError(key, 'must be finite')
    if positive and not x > 0.0:
        raise ConfigError(key, 'must be positive')
    if nonnegative and x < 0.0:
        raise ConfigError(key, 'must be >= 0')
    return x


def _int(value, key, minimum = None):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer, float)) or int(value) != value:
        raise ConfigError(key, 'expected an integer, got %r' % (value,))
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(key, 'must be >= %d' % minimum)
    return value


def _choice(value, valid, key):
    if value not in valid:
        raise ConfigError(key, 'must be one of %s, got %r' % (sorted(valid), value))
    return value


def _float_list(value, key, nonnegative = False, positive = False):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(key, 'expected a nonempty list of numbers')
    return [_float(v, '%s[%d]' % (key, i), positive = positive, nonnegative = nonnegative) for i, v in enumerate(value)]


def _number(v):
    """canonical JSON form of a matrix entry"""
    z = complex(v)
    return float(z.real) if z.imag == 0.0 else str(z)


def _matrix(value, key):
    try:
        A = parse_matrix(value, name = key)
    except (TypeError, ValueError) as e:
        raise ConfigError(key, str(e))
    return [[_number(v) for v in row] for row in A.tolist()]


def _vector(value, key):
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(key, 'expected a nonempty list')
    try:
        return [_number(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(key, 'entries must be numbers or complex strings')


class RunConfig(object):
    """
    Validated configuration of a single flow run

    system (exactly one of):
        benchmark: {tau_fs, omega0_cm, vdd_cm, mu_debye, theta_sg}
        explicit:  {H0, mu, psi0, psif, units}   units = atomic | laboratory (cm^-1, Debye, fs)
    grid:        {n_points, span} for the benchmark (span in units of tau), {t_start, t_end, n_points} otherwise
    field:       {amplitude, center, width, frequency, phase} or {samples} (explicit systems only)
    envelope:    {tau, center}
    constraints: list of {label, kind, kernel, target, frequency, scale}
    eps, policy, tolerance, max_iter, drift_quadrature, gradient_rule, output, seed, name
    """

    _top_keys = ('name', 'system', 'grid', 'field', 'envelope', 'constraints', 'eps', 'policy', 'tolerance',
                 'max_iter', 'drift_quadrature', 'gradient_rule', 'output', 'seed', 'derived')

    def __init__(self, settings):
        self._settings = settings

    #### parsing ####
    @classmethod
    def from_file(cls, file_name):
        return cls.from_dict(load_file(file_name))

    @classmethod
    def from_dict(cls, d):
        """
        validates a config dictionary; the `derived` block written by to_dict is ignored
        """
        _check_keys(d, cls._top_keys, '')
        s = {}
        s['name'] = str(d.get('name', 'run'))
        s['system'] = cls._parse_system(d.get('system', None))
        benchmark = 'benchmark' in s['system']
        s['grid'] = cls._parse_grid(d.get('grid', {}), benchmark)
        s['field'] = cls._parse_field(d.get('field', None), benchmark, s['grid'])
        s['envelope'] = cls._parse_envelope(d.get('envelope', {}), benchmark)
        s['constraints'] = cls._parse_constraints(d.get('constraints', None), benchmark)
        s['eps'] = _float(d.get('eps', DEFAULT_EPS), 'eps', nonnegative = True)
        s['policy'] = cls._parse_policy(d.get('policy', {}))
        tolerance = d.get('tolerance', DEFAULT_TOLERANCE)
        s['tolerance'] = None if tolerance is None else _float(tolerance, 'tolerance', nonnegative = True)
        s['max_iter'] = _int(d.get('max_iter', DESK_MAX_ITER), 'max_iter', minimum = 0)
        s['drift_quadrature'] = _choice(d.get('drift_quadrature', DEFAULT_DRIFT_QUADRATURE), VALID_DRIFT_QUADRATURES, 'drift_quadrature')
        s['gradient_rule'] = _choice(d.get('gradient_rule', DEFAULT_GRADIENT_RULE), VALID_GRADIENT_RULES, 'gradient_rule')
        s['output'] = cls._parse_output(d.get('output', {}))
        s['seed'] = _int(d.get('seed', DEFAULT_SEED), 'seed', minimum = 0)
        return cls(s)

    @staticmethod
    def _parse_system(d):
        if not isinstance(d, dict) or len(d) != 1 or list(d.keys())[0] not in ('benchmark', 'explicit'):
            raise ConfigError('system', 'exactly one of `benchmark` or `explicit` is required')

        if 'benchmark' in d:
            b = d['benchmark'] or {}
            keys = ('tau_fs', 'omega0_cm', 'vdd_cm', 'mu_debye', 'theta_sg')
            _check_keys(b, keys, 'system.benchmark')
            out = {'tau_fs': _float(b.get('tau_fs', DEFAULT_TAU_FS), 'system.benchmark.tau_fs', positive = True),
                   'omega0_cm': _float(b.get('omega0_cm', BENCHMARK_OMEGA0_CM), 'system.benchmark.omega0_cm', positive = True),
                   'vdd_cm': _float(b.get('vdd_cm', BENCHMARK_VDD_CM), 'system.benchmark.vdd_cm', positive = True),
                   'mu_debye': _float(b.get('mu_debye', BENCHMARK_MU_DEBYE), 'system.benchmark.mu_debye', positive = True),
                   'theta_sg': _float(b.get('theta_sg', BENCHMARK_PULSE_AREA), 'system.benchmark.theta_sg', positive = True)}
            return {'benchmark': out}

        e = d['explicit']
        _check_keys(e, ('H0', 'mu', 'psi0', 'psif', 'units'), 'system.explicit')
        for key in ('H0', 'mu', 'psi0', 'psif'):
            if key not in e:
                raise ConfigError('system.explicit.%s' % key, 'missing')
        out = {'H0': _matrix(e['H0'], 'system.explicit.H0'),
               'mu': _matrix(e['mu'], 'system.explicit.mu'),
               'psi0': _vector(e['psi0'], 'system.explicit.psi0'),
               'psif': _vector(e['psif'], 'system.explicit.psif'),
               'units': _choice(e.get('units', 'atomic'), VALID_UNITS, 'system.explicit.units')}
        return {'explicit': out}

    @staticmethod
    def _parse_grid(d, benchmark):
        if benchmark:
            _check_keys(d, ('n_points', 'span'), 'grid')
            return {'n_points': _int(d.get('n_points', DESK_N_POINTS), 'grid.n_points', minimum = 2),
                    'span': _float(d.get('span', BENCHMARK_SPAN), 'grid.span', positive = True)}
        _check_keys(d, ('t_start', 't_end', 'n_points'), 'grid')
        for key in ('t_start', 't_end', 'n_points'):
            if key not in d:
                raise ConfigError('grid.%s' % key, 'missing')
        out = {'t_start': _float(d['t_start'], 'grid.t_start'),
               't_end': _float(d['t_end'], 'grid.t_end'),
               'n_points': _int(d['n_points'], 'grid.n_points', minimum = 2)}
        if not out['t_end'] > out['t_start']:
            raise ConfigError('grid.t_end', 'must exceed grid.t_start')
        return out

    @staticmethod
    def _parse_field(d, benchmark, grid):
        if benchmark:
            if d is not None:
                raise ConfigError('field', 'the benchmark fixes its initial field')
            return None
        if d is None:
            raise ConfigError('field', 'missing')
        if 'samples' in d:
            _check_keys(d, ('samples',), 'field')
            samples = _float_list(d['samples'], 'field.samples')
            if len(samples) != grid['n_points']:
                raise ConfigError('field.samples', 'has %d samples but grid.n_points = %d' % (len(samples), grid['n_points']))
            return {'samples': samples}
        _check_keys(d, ('amplitude', 'center', 'width', 'frequency', 'phase'), 'field')
        for key in ('amplitude', 'width'):
            if key not in d:
                raise ConfigError('field.%s' % key, 'missing')
        return {'amplitude': _float(d['amplitude'], 'field.amplitude'),
                'center': _float(d.get('center', 0.5 * (grid['t_start'] + grid['t_end'])), 'field.center'),
                'width': _float(d['width'], 'field.width', positive = True),
                'frequency': _float(d.get('frequency', 0.0), 'field.frequency', nonnegative = True),
                'phase': _float(d.get('phase', 0.0), 'field.phase')}

    @staticmethod
    def _parse_envelope(d, benchmark):
        _check_keys(d, ('tau', 'center'), 'envelope')
        out = {}
        if 'tau' in d:
            out['tau'] = _float(d['tau'], 'envelope.tau', positive = True)
        elif not benchmark:
            raise ConfigError('envelope.tau', 'missing')
        if 'center' in d:
            out['center'] = _float(d['center'], 'envelope.center')
        return out

    @staticmethod
    def _parse_constraints(value, benchmark):
        if value is None:
            if benchmark:
                value = [{'label': 'zero_area', 'kind': 'affine', 'kernel': 'ones', 'target': TARGET_FROM_INITIAL_FIELD},
                         {'label': 'fluence', 'kind': 'fluence', 'target': TARGET_FROM_INITIAL_FIELD},
                         {'label': 'reference_area', 'kind': 'affine', 'kernel': 'reference_cosine', 'target': TARGET_FROM_INITIAL_FIELD}]
            else:
                value = []
        if not isinstance(value, (list, tuple)):
            raise ConfigError('constraints', 'expected a list')

        out, labels = [], set()
        for i, c in enumerate(value):
            path = 'constraints[%d]' % i
            _check_keys(c, ('label', 'kind', 'kernel', 'target', 'frequency', 'scale'), path)
            kind = _choice(c.get('kind', None), VALID_CONSTRAINT_KINDS, path + '.kind')
            label = str(c.get('label', '%s_%d' % (kind, i + 1)))
            if label in labels:
                raise ConfigError(path + '.label', 'duplicate label %s' % label)
            labels.add(label)

            target = c.get('target', TARGET_FROM_INITIAL_FIELD)
            if target != TARGET_FROM_INITIAL_FIELD:
                target = _float(target, path + '.target')
            entry = {'label': label, 'kind': kind, 'target': target}

            if kind == 'affine':
                kernel = c.get('kernel', None)
                if kernel is None:
                    raise ConfigError(path + '.kernel', 'affine constraints need a kernel')
                if isinstance(kernel, str):
                    kernel = _choice(kernel, VALID_KERNEL_NAMES, path + '.kernel')
                else:
                    kernel = _float_list(kernel, path + '.kernel')
                entry['kernel'] = kernel
                if kernel == 'reference_cosine':
                    for key in ('frequency', 'scale'):
                        if key in c:
                            entry[key] = _float(c[key], '%s.%s' % (path, key))
                        elif not benchmark:
                            raise ConfigError('%s.%s' % (path, key), 'reference_cosine needs a %s outside the benchmark' % key)
            else:
                for key in ('kernel', 'frequency', 'scale'):
                    if key in c:
                        raise ConfigError('%s.%s' % (path, key), 'fluence constraints take no %s' % key)
            out.append(entry)
        return out

    @staticmethod
    def _parse_policy(d):
        _check_keys(d, ('kind', 'ds', 'factor', 'min_ds', 'alpha', 'curvature', 'safety', 'refresh', 'probe'), 'policy')
        kind = _choice(d.get('kind', DEFAULT_POLICY_KIND), VALID_POLICY_KINDS, 'policy.kind')
        out = {'kind': kind}
        for key, v in d.items():
            if key == 'kind':
                continue
            if key == 'curvature' and v is None:
                continue
            if key == 'refresh':
                out[key] = _int(v, 'policy.refresh', minimum = 1)
            else:
                out[key] = _float(v, 'policy.%s' % key, positive = True)
        try:
            StepPolicy.from_dict(out)
        except ValueError as e:
            raise ConfigError('policy', str(e))
        return out

    @staticmethod
    def _parse_output(d):
        _check_keys(d, ('directory', 'formats'), 'output')
        formats = d.get('formats', ['csv', 'json'])
        if isinstance(formats, str):
            formats = [formats]
        for i, f in enumerate(formats):
            _choice(f, VALID_OUTPUT_FORMATS, 'output.formats[%d]' % i)
        return {'directory': str(d.get('directory', results_dir)), 'formats': sorted(set(formats))}

    #### properties ####
    @property
    def name(self):
        return self._settings['name']

    @property
    def is_benchmark(self):
        return 'benchmark' in self._settings['system']

    @property
    def eps(self):
        return self._settings['eps']

    @property
    def tolerance(self):
        return self._settings['tolerance']

    @property
    def max_iter(self):
        return self._settings['max_iter']

    @property
    def drift_quadrature(self):
        return self._settings['drift_quadrature']

    @property
    def gradient_rule(self):
        return self._settings['gradient_rule']

    @property
    def seed(self):
        return self._settings['seed']

    @property
    def output_dir(self):
        return Path(self._settings['output']['directory'])

    @property
    def formats(self):
        return list(self._settings['output']['formats'])

    @property
    def policy(self):
        return StepPolicy.from_dict(self._settings['policy'])

    @property
    def hash(self):
        return config_hash(self.to_dict(derived = False))

    def replace(self, **kwargs):
        """:return: copy with top-level settings replaced (values are re-validated)"""
        d = self.to_dict(derived = False)
        d.update(kwargs)
        return RunConfig.from_dict(d)

    #### building ####
    def _benchmark_params(self):
        return BenchmarkParams(**self._settings['system']['benchmark'])

    def _time_scale(self):
        laboratory = not self.is_benchmark and self._settings['system']['explicit']['units'] == 'laboratory'
        return fs_to_au(1.0) if laboratory else 1.0

    def _build_system_grid_field(self):
        s = self._settings
        if self.is_benchmark:
            params = self._benchmark_params()
            b = s['system']['benchmark']
            bm = build_benchmark(tau_fs = b['tau_fs'], n_points = s['grid']['n_points'],
                                 omega0_cm = b['omega0_cm'], vdd_cm = b['vdd_cm'], mu_debye = b['mu_debye'], theta_sg = b['theta_sg'])
            if s['grid']['span'] != BENCHMARK_SPAN:
                span = s['grid']['span'] * params.tau
                grid = TimeGrid(-span, span, s['grid']['n_points'])
                t = grid.times
                E = params.amplitude * np.exp(-t ** 2 / (2.0 * params.tau ** 2)) * np.cos(params.omega_r * t)
                return bm.system, grid, ControlField(grid, E), params
            return bm.system, bm.grid, bm.field, params

        e = s['system']['explicit']
        if e['units'] == 'laboratory':
            H0 = np.array(parse_matrix(e['H0'])) / HARTREE_TO_WAVENUMBER
            mu = np.array(parse_matrix(e['mu'])) / AU_DIPOLE_TO_DEBYE
        else:
            H0, mu = parse_matrix(e['H0']), parse_matrix(e['mu'])
        try:
            system = QuantumSystem(H0 = H0, mu = mu, psi0 = e['psi0'], psif = e['psif'])
        except ValueError as err:
            raise ConfigError('system.explicit', str(err))

        ts = self._time_scale()
        g = s['grid']
        grid = TimeGrid(g['t_start'] * ts, g['t_end'] * ts, g['n_points'])
        f = s['field']
        if 'samples' in f:
            E = np.array(f['samples'])
        else:
            t = grid.times
            center, width = f['center'] * ts, f['width'] * ts
            frequency = f['frequency'] / ts
            E = f['amplitude'] * np.exp(-(t - center) ** 2 / (2.0 * width ** 2)) * np.cos(frequency * (t - center) + f['phase'])
        return system, grid, ControlField(grid, E), None

    def _kernel(self, entry, grid, params):
        t = grid.times
        kernel = entry['kernel']
        if kernel == 'ones':
            return np.ones_like(t)
        if kernel == 'reference_cosine':
            frequency = entry.get('frequency', None)
            scale = entry.get('scale', None)
            frequency = params.omega_r if frequency is None else frequency / self._time_scale()
            scale = params.mu_d if scale is None else scale
            return scale * np.cos(frequency * t)
        if len(kernel) != grid.n_points:
            raise ConfigError('constraints.%s.kernel' % entry['label'], 'has %d samples but the grid has %d' % (len(kernel), grid.n_points))
        return np.array(kernel)

    def build(self):
        """
        :return: Problem with every target resolved and the initial field checked for feasibility

        raises:
            FeasibilityError if the initial field violates a constraint beyond FEASIBILITY_RTOL relative
        """
        s = self._settings
        system, grid, field, params = self._build_system_grid_field()

        constraints = ConstraintSet()
        for entry in s['constraints']:
            if entry['kind'] == 'affine':
                c = Constraint.affine(self._kernel(entry, grid, params), target = 0.0, label = entry['label'])
            else:
                c = Constraint.fluence(0.0, label = entry['label'])
            target = c.evaluate(field) if entry['target'] == TARGET_FROM_INITIAL_FIELD else entry['target']
            constraints.add(c.with_target(target))

        if not constraints.is_feasible(field):
            drift = constraints.violation(field, relative = True)
            worst = constraints.labels[int(np.argmax(np.abs(drift)))]
            raise FeasibilityError('constraints', 'initial field violates %s by %1.3e (relative)' % (worst, np.max(np.abs(drift))))

        env = s['envelope']
        if self.is_benchmark:
            tau = env.get('tau', params.tau_fs) * fs_to_au(1.0)
            center = fs_to_au(env['center']) if 'center' in env else 0.0
        else:
            ts = self._time_scale()
            tau = env['tau'] * ts
            center = env['center'] * ts if 'center' in env else None
        envelope = build_envelope(grid, tau, center = center)

        objective = FidelityObjective(system, gradient_rule = s['gradient_rule'])
        return Problem(objective = objective, constraints = constraints, envelope = envelope, field = field, name = s['name'])

    #### output ####
    def _derived(self):
        if self.is_benchmark:
            params = self._benchmark_params()
            derived = params.to_dict(atomic_units = True)
            span = self._settings['grid']['span'] * params.tau
            derived.update({'t_start': -span, 't_end': span, 'dt': 2.0 * span / (self._settings['grid']['n_points'] - 1)})
            return derived
        ts = self._time_scale()
        g = self._settings['grid']
        return {'t_start': g['t_start'] * ts, 't_end': g['t_end'] * ts, 'dt': (g['t_end'] - g['t_start']) * ts / (g['n_points'] - 1)}

    def to_dict(self, derived = True):
        d = json.loads(json.dumps(self._settings))
        if d['field'] is None:
            d.pop('field')
        if derived:
            d['derived'] = self._derived()
        return d

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys = True)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict(derived = False) == other.to_dict(derived = False)

    def __hash__(self):
        return hash(self.hash)

    def __repr__(self):
        return 'RunConfig(name = %r, hash = %s)' % (self.name, self.hash)


#### sweeps ####

def _sweep_defaults(experiment):
    d = {'experiment': experiment,
         'problem': 'benchmark',
         'taus': [DEFAULT_TAU_FS],
         'eps': [0.0],
         'ds': [DEFAULT_STEP],
         'steps': DESK_MAX_ITER,
         'tolerance': DEFAULT_TOLERANCE,
         'n_points': None,
         'seed': DEFAULT_SEED,
         'window': None,
         'trials': DEFAULT_LEMMA_TRIALS,
         'n_jobs': 1,
         'alpha': DEFAULT_CFL_ALPHA,
         'safety': DEFAULT_CURVATURE_SAFETY}
    if experiment == 'converge':
        d.update({'problem': 'synthetic', 'eps': list(CONVERGENCE_EPS), 'ds': [CONVERGENCE_STEP],
                  'steps': DEFAULT_COMMON_STEPS, 'tolerance': None, 'window': list(CONVERGENCE_WINDOW)})
    elif experiment == 'cond-drift':
        d.update({'eps': list(COND_DRIFT_EPS), 'window': list(COND_DRIFT_WINDOW)})
    elif experiment == 'payoff':
        d.update({'eps': list(PAYOFF_EPS), 'ds': list(PAYOFF_STEPS)})
    elif experiment == 'verify':
        d.update({'eps': [IDENTITY_EPS], 'steps': DEFAULT_COMMON_STEPS})
    elif experiment == 'fields':
        d.update({'eps': list(FINAL_FIELD_EPS)})
    elif experiment == 'cfl':
        d.update({'problem': 'quadratic', 'steps': CFL_CHECK_STEPS})
    elif experiment == 'drift':
        d.update({'problem': 'synthetic', 'eps': [DRIFT_CHECK_EPS], 'ds': [DRIFT_CHECK_STEP],
                  'steps': DRIFT_CHECK_STEPS, 'tolerance': None})
    return d


class SweepSpec(object):
    """
    Grid of flow runs for one experiment: pulse durations x eps values x step sizes

    steps is the common iteration count (max_iter of every run); tolerance None disables the stopping test
    """

    _keys = ('experiment', 'problem', 'taus', 'eps', 'ds', 'steps', 'tolerance', 'n_points', 'seed', 'window',
             'trials', 'n_jobs', 'alpha', 'safety')

    def __init__(self, experiment, **kwargs):
        _choice(experiment, VALID_EXPERIMENTS, 'experiment')
        d = _sweep_defaults(experiment)
        _check_keys(kwargs, self._keys, '')
        d.update({k: v for k, v in kwargs.items() if k != 'experiment'})

        self._experiment = experiment
        self._problem = _choice(d['problem'], VALID_PROBLEM_KINDS, 'problem')
        self._taus = _float_list(d['taus'], 'taus', positive = True)
        self._eps = _float_list(d['eps'], 'eps', nonnegative = True)
        self._ds = _float_list(d['ds'], 'ds', positive = True)
        self._steps = _int(d['steps'], 'steps', minimum = 0)
        self._tolerance = None if d['tolerance'] is None else _float(d['tolerance'], 'tolerance', nonnegative = True)
        self._n_points = None if d['n_points'] is None else _int(d['n_points'], 'n_points', minimum = 2)
        self._seed = _int(d['seed'], 'seed', minimum = 0)
        self._window = None
        if d['window'] is not None:
            window = _float_list(d['window'], 'window', positive = True)
            if len(window) != 2 or not window[0] < window[1]:
                raise ConfigError('window', 'expected [lower, upper] with lower < upper')
            self._window = tuple(window)
        if experiment in SLOPE_EXPERIMENTS:
            self._check_slope_window()
        self._trials = _int(d['trials'], 'trials', minimum = 1)
        self._n_jobs = _int(d['n_jobs'], 'n_jobs', minimum = 1)
        self._alpha = _float(d['alpha'], 'alpha', positive = True)
        if not self._alpha < 2.0:
            raise ConfigError('alpha', 'must lie in (0, 2)')
        self._safety = _float(d['safety'], 'safety', positive = True)

    def _check_slope_window(self):
        if self._experiment == 'converge':
            if 0.0 not in self._eps:
                raise ConfigError('eps', 'converge needs eps = 0 as the reference run')
            if self._window is None:
                raise ConfigError('window', 'converge needs a fit window')
        if self._window is None:
            return
        positive = np.array([e for e in self._eps if e > 0.0])
        lo, hi = self._window
        if len(positive) == 0 or lo < positive.min() * (1.0 - 1e-9) or hi > positive.max() * (1.0 + 1e-9):
            raise ConfigError('window', '[%g, %g] must lie inside the positive eps range' % (lo, hi))
        n_inside = int(np.sum((positive >= lo * (1.0 - 1e-9)) & (positive <= hi * (1.0 + 1e-9))))
        if n_inside < MIN_WINDOW_POINTS:
            raise ConfigError('window', 'needs at least %d eps values inside [%g, %g], got %d' % (MIN_WINDOW_POINTS, lo, hi, n_inside))

    @classmethod
    def from_dict(cls, experiment, d = None):
        d = dict(d or {})
        if d.get('experiment', experiment) != experiment:
            raise ConfigError('experiment', 'config is for %r, not %r' % (d['experiment'], experiment))
        d.pop('experiment', None)
        return cls(experiment, **d)

    @classmethod
    def from_file(cls, experiment, file_name):
        return cls.from_dict(experiment, load_file(file_name))

    #### properties ####
    @property
    def experiment(self):
        return self._experiment

    @property
    def problem(self):
        return self._problem

    @property
    def taus(self):
        return list(self._taus)

    @property
    def eps(self):
        return list(self._eps)

    @property
    def ds(self):
        return list(self._ds)

    @property
    def steps(self):
        return self._steps

    @property
    def tolerance(self):
        return self._tolerance

    @property
    def n_points(self):
        return self._n_points

    @property
    def seed(self):
        return self._seed

    @property
    def window(self):
        return self._window

    @property
    def trials(self):
        return self._trials

    @property
    def n_jobs(self):
        return self._n_jobs

    @property
    def alpha(self):
        return self._alpha

    @property
    def safety(self):
        return self._safety

    @property
    def hash(self):
        """hash of every setting that changes the results (n_jobs does not)"""
        d = self.to_dict()
        d.pop('n_jobs')
        return config_hash(d)

    def replace(self, **kwargs):
        d = self.to_dict()
        d.update(kwargs)
        return SweepSpec.from_dict(self._experiment, d)

    def to_dict(self):
        return {'experiment': self._experiment, 'problem': self._problem, 'taus': self.taus, 'eps': self.eps,
                'ds': self.ds, 'steps': self._steps, 'tolerance': self._tolerance, 'n_points': self._n_points,
                'seed': self._seed, 'window': None if self._window is None else list(self._window),
                'trials': self._trials, 'n_jobs': self._n_jobs, 'alpha': self._alpha, 'safety': self._safety}

    def __eq__(self, other):
        return isinstance(other, SweepSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return 'SweepSpec(experiment = %r, hash = %s)' % (self._experiment, self.hash)
