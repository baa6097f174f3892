import json
import hashlib
import numpy as np
from gramflow.defaults import __version__, CSV_SCHEMA_VERSION
from gramflow.errors import GridMismatchError


def parse_samples(values, name = 'samples', n_points = None):
    """
    helper function to parse a real sample vector

    :param values: list or np.array of real numbers
    :param name: name used in error messages
    :param n_points: required length (optional)
    :return: flat np.array of dtype float

    raises:
        ValueError if samples are complex, not finite, or not a vector
        GridMismatchError if the length does not match n_points
    """
    x = np.asarray(values)
    if np.iscomplexobj(x):
        raise ValueError('`%s` must be real' % name)
    x = np.array(x, dtype = float).flatten()
    if not np.all(np.isfinite(x)):
        raise ValueError('`%s` must be finite' % name)
    if n_points is not None and len(x) != n_points:
        raise GridMismatchError('`%s` has %d samples but the grid has %d points' % (name, len(x), n_points))
    return x


def parse_matrix(values, name = 'matrix'):
    """
    helper function to parse a square matrix; entries may be numbers or strings such as '1+2j'
    :return: 2D np.array (complex if any entry is complex, float otherwise)
    """
    if isinstance(values, np.ndarray):
        A = values
    else:
        rows = [[complex(v) if isinstance(v, str) else v for v in row] for row in values]
        A = np.array(rows)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError('`%s` must be a square matrix' % name)
    if np.iscomplexobj(A) and np.all(A.imag == 0.0):
        A = A.real
    if not np.all(np.isfinite(A)):
        raise ValueError('`%s` must be finite' % name)
    return np.array(A, dtype = complex if np.iscomplexobj(A) else float)


def parse_state(values, name = 'state'):
    """
    helper function to parse a complex state vector and normalize it
    """
    psi = np.array([complex(v) if isinstance(v, str) else v for v in np.asarray(values).flatten()], dtype = complex)
    nrm = np.linalg.norm(psi)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ValueError('`%s` must be a nonzero finite vector' % name)
    return psi / nrm


def config_hash(cfg):
    """
    :param cfg: JSON-serializable dictionary
    :return: first 10 hex digits of the SHA-1 digest of the canonical JSON dump
    """
    blob = json.dumps(cfg, sort_keys = True, default = float).encode('utf-8')
    return hashlib.sha1(blob).hexdigest()[:10]


def write_csv(df, file_name, **metadata):
    """
    writes a DataFrame to CSV, preceded by `#`-prefixed metadata lines
    the first metadata line always carries the package version and the CSV schema version

    :param df: pandas.DataFrame
    :param file_name: path of the CSV file
    :param metadata: key/value pairs written as `# key: value`
    :return: file_name
    """
    with open(file_name, 'w', newline = '') as f:
        f.write('# gramflow %s schema v%d\n' % (__version__, CSV_SCHEMA_VERSION))
        for k, v in metadata.items():
            f.write('# %s: %s\n' % (k, v))
        df.to_csv(f, index = False, float_format = '%.17g')
    return file_name


def write_json(info, file_name):
    with open(file_name, 'w') as f:
        json.dump(info, f, indent = 2, sort_keys = True, default = _json_default)
    return file_name


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError('cannot serialize %r' % type(obj))
