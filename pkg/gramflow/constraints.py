import warnings
import numpy as np
import pandas as pd
from prettytable import PrettyTable
from gramflow.defaults import VALID_CONSTRAINT_KINDS, RELATIVE_DRIFT_FLOOR, FEASIBILITY_RTOL
from gramflow.errors import GridMismatchError
from gramflow.helper_functions import parse_samples
from gramflow.model import ControlField
from gramflow.numkit import trapezoid

__all__ = ['Constraint', 'ConstraintSet', 'evaluate', 'gradient', 'violation', 'benchmark_constraints']


class Constraint(object):
    """
    Integral equality constraint h[E] = int phi(E(t), t) dt = target

    kind = 'affine':  phi = eta(t) E(t), gradient eta(t)
    kind = 'fluence': phi = E(t)^2, gradient 2 E(t)
    """

    def __init__(self, kind, target, label, kernel = None):

        assert kind in VALID_CONSTRAINT_KINDS, 'kind must be one of %r' % VALID_CONSTRAINT_KINDS
        assert isinstance(label, str) and len(label) > 0, 'label must be a non-empty string'
        target = float(target)
        if not np.isfinite(target):
            raise ValueError('target of constraint %s must be finite' % label)

        if kind == 'affine':
            if kernel is None:
                raise ValueError('affine constraint %s needs a kernel' % label)
            kernel = parse_samples(kernel, name = 'kernel of %s' % label)
            kernel.flags.writeable = False
        elif kernel is not None:
            raise ValueError('fluence constraint %s takes no kernel' % label)

        self._kind = kind
        self._target = target
        self._label = label
        self._kernel = kernel

    @classmethod
    def affine(cls, kernel, target = 0.0, label = 'affine'):
        return cls(kind = 'affine', target = target, label = label, kernel = kernel)

    @classmethod
    def fluence(cls, target, label = 'fluence'):
        return cls(kind = 'fluence', target = target, label = label)

    #### properties ####
    @property
    def kind(self):
        return self._kind

    @property
    def target(self):
        return self._target

    @property
    def label(self):
        return self._label

    @property
    def kernel(self):
        return self._kernel

    @property
    def is_affine(self):
        return self._kind == 'affine'

    def with_target(self, target):
        return Constraint(kind = self._kind, target = target, label = self._label, kernel = self._kernel)

    #### evaluation ####
    def _check_field(self, field):
        assert isinstance(field, ControlField), '`field` must be a ControlField'
        if self.is_affine and len(self._kernel) != field.grid.n_points:
            raise GridMismatchError('kernel of %s has %d samples but the field has %d' % (self._label, len(self._kernel), field.grid.n_points))

    def integrand(self, field):
        self._check_field(field)
        E = field.samples
        return self._kernel * E if self.is_affine else E * E

    def evaluate(self, field):
        return trapezoid(self.integrand(field), field.grid.dt)

    def gradient(self, field):
        self._check_field(field)
        if self.is_affine:
            return np.array(self._kernel)
        return 2.0 * field.samples

    def scale(self, field):
        """:return: int |phi(E(t), t)| dt, the natural size of h for feasibility checks"""
        return trapezoid(np.abs(self.integrand(field)), field.grid.dt)

    def __eq__(self, other):
        if not isinstance(other, Constraint):
            return False
        same_kernel = (self._kernel is None and other._kernel is None) or \
                      (self._kernel is not None and other._kernel is not None and np.array_equal(self._kernel, other._kernel))
        return (self._kind, self._target, self._label) == (other._kind, other._target, other._label) and same_kernel

    def __repr__(self):
        return 'Constraint(kind = %r, label = %r, target = %r)' % (self._kind, self._label, self._target)


class ConstraintSet(object):
    """
    Ordered collection of constraints with unique labels
    """

    def __init__(self, constraints = ()):
        self._constraints = {}
        for c in constraints:
            self.add(c)

    def __len__(self):
        return len(self._constraints)

    def __iter__(self):
        return self._constraints.values().__iter__()

    def __getitem__(self, index):
        if isinstance(index, str):
            return self._constraints[index]
        elif isinstance(index, (int, np.integer)):
            return list(self._constraints.values())[index]
        raise IndexError('index must be a label or an int')

    def __contains__(self, label):
        return label in self._constraints

    def add(self, constraint):
        """
        :param constraint: Constraint
        :return: label of the constraint
        """
        assert isinstance(constraint, Constraint), 'ConstraintSet can only contain Constraints'
        if constraint.label in self._constraints:
            warnings.warn('Overwriting constraint %s' % constraint.label)
        self._constraints[constraint.label] = constraint
        return constraint.label

    def remove(self, label):
        if label not in self._constraints:
            raise ValueError('no constraint with label %s' % label)
        self._constraints.pop(label)
        return True

    @property
    def labels(self):
        return list(self._constraints.keys())

    @property
    def targets(self):
        return np.array([c.target for c in self], dtype = float)

    def evaluate(self, field):
        return np.array([c.evaluate(field) for c in self], dtype = float)

    def gradients(self, field):
        return [c.gradient(field) for c in self]

    def violation(self, field, relative = False):
        return violation(self, field, relative = relative)

    def is_feasible(self, field, rtol = FEASIBILITY_RTOL):
        """
        :return: True if |h_m[E] - C_m| <= rtol * max(|C_m|, int |phi_m|) for every constraint
        """
        for c in self:
            tol = rtol * max(abs(c.target), c.scale(field))
            if abs(c.evaluate(field) - c.target) > tol:
                return False
        return True

    def with_targets_from(self, field):
        """:return: copy of the set with every target replaced by its value at field"""
        return ConstraintSet([c.with_target(c.evaluate(field)) for c in self])

    @property
    def df(self):
        return pd.DataFrame({'label': self.labels,
                             'kind': [c.kind for c in self],
                             'target': self.targets})

    def __eq__(self, other):
        return isinstance(other, ConstraintSet) and self.labels == other.labels and all(a == b for a, b in zip(self, other))

    def __repr__(self):
        return 'ConstraintSet(%r)' % self.labels

    def __str__(self):
        return tabulate_constraints(self)


def tabulate_constraints(constraint_set, field = None):
    t = PrettyTable()
    t.add_column('label', constraint_set.labels, align = 'l')
    t.add_column('kind', [c.kind for c in constraint_set], align = 'l')
    t.add_column('target', ['%1.6e' % c.target for c in constraint_set], align = 'r')
    if field is not None:
        t.add_column('drift', ['%1.3e' % v for v in violation(constraint_set, field)], align = 'r')
    return str(t)


#### functional interface ####

def evaluate(c, field):
    """:return: h[E] by the trapezoid rule"""
    return c.evaluate(field)


def gradient(c, field):
    """:return: samples of dh/dE(t)"""
    return c.gradient(field)


def violation(constraint_set, field, relative = False):
    """
    :param constraint_set: ConstraintSet
    :param field: ControlField
    :param relative: if True, divide each drift by max(|C_m|, floor); constraints with a zero target stay absolute
    :return: np.array of h_m[E] - C_m
    """
    drift = constraint_set.evaluate(field) - constraint_set.targets
    if relative:
        targets = constraint_set.targets
        scale = np.where(targets == 0.0, 1.0, np.maximum(np.abs(targets), RELATIVE_DRIFT_FLOOR))
        drift = drift / scale
    return drift


def benchmark_constraints(benchmark):
    """
    zero area, fluence and reference area constraints of the benchmark, with targets from its initial field

    :param benchmark: Benchmark from build_benchmark
    :return: ConstraintSet
    """
    t = benchmark.grid.times
    params = benchmark.params
    return ConstraintSet([
        Constraint.affine(np.ones_like(t), target = 0.0, label = 'zero_area'),
        Constraint.fluence(benchmark.fluence_target, label = 'fluence'),
        Constraint.affine(params.mu_d * np.cos(params.omega_r * t), target = benchmark.reference_target, label = 'reference_area'),
        ])
