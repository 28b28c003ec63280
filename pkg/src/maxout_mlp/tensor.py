"""Dense 2-D matrix helpers.

Matrices are plain ``numpy.ndarray`` objects with ``ndim == 2``; rows are
batch examples. The helpers here add the shape checks the rest of the
package relies on and refuse any broadcasting other than adding a row
vector to every row.
"""

import numpy as np

from .exceptions import DimensionError

FLOAT_DTYPES = {"float32": np.float32, "float64": np.float64}


def resolve_dtype(precision):
    """Map ``"float32"``/``"float64"`` (or a numpy dtype) to a numpy dtype."""
    if isinstance(precision, str):
        try:
            return np.dtype(FLOAT_DTYPES[precision])
        except KeyError:
            raise ValueError(f"unknown precision {precision!r}") from None
    dt = np.dtype(precision)
    if dt not in (np.float32, np.float64):
        raise ValueError(f"unsupported precision {dt}")
    return dt


def as_matrix(data, dtype=np.float64):
    """Return ``data`` as a 2-D array of ``dtype``.

    A flat sequence becomes a single row. Anything with more than two
    dimensions is rejected.
    """
    m = np.asarray(data, dtype=dtype)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def _check_2d(m, name):
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")


def matmul(a, b):
    _check_2d(a, "a")
    _check_2d(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def add_row_broadcast(m, v):
    """Add the row vector ``v`` to every row of ``m``."""
    _check_2d(m, "m")
    v = np.asarray(v)
    if v.ndim == 2 and v.shape[0] == 1:
        v = v[0]
    if v.ndim != 1 or v.shape[0] != m.shape[1]:
        raise DimensionError(
            f"row vector of shape {v.shape} does not match {m.shape[1]} columns"
        )
    return m + v


def elementwise(m, f):
    """Apply ``f`` to every element. ``f`` may be a ufunc or a scalar callable."""
    _check_2d(m, "m")
    if isinstance(f, np.ufunc):
        return f(m)
    return np.vectorize(f, otypes=[m.dtype])(m) if m.size else m.copy()


def reduce_sum(m):
    _check_2d(m, "m")
    return m.sum()


def transpose(m):
    _check_2d(m, "m")
    return m.T
