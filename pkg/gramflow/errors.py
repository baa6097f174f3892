"""
Exceptions raised by gramflow
"""
import numpy as np

__all__ = ['GramflowError', 'SymmetryError', 'FactorizationError', 'GridMismatchError', 'ConfigError', 'FeasibilityError']


class GramflowError(Exception):
    """Base class for errors raised by gramflow"""
    pass


class SymmetryError(GramflowError, ValueError):

    def __init__(self, defect, tol):
        self.defect = float(defect)
        self.tol = float(tol)
        super().__init__('matrix is not Hermitian: max |A - A*| = %1.3e exceeds %1.1e' % (self.defect, self.tol))


class FactorizationError(GramflowError, np.linalg.LinAlgError):

    def __init__(self, pivot, sigma_min_sq = None):
        self.pivot = int(pivot)
        self.sigma_min_sq = sigma_min_sq
        msg = 'Cholesky factorisation failed: non-positive pivot at index %d' % self.pivot
        if sigma_min_sq is not None:
            msg += ' (sigma_min^2 = %1.3e)' % sigma_min_sq
        super().__init__(msg)


class GridMismatchError(GramflowError, ValueError):
    pass


class ConfigError(GramflowError, ValueError):

    def __init__(self, key, msg):
        self.key = key
        super().__init__('%s: %s' % (key, msg))


class FeasibilityError(ConfigError):
    pass
