"""Linear algebra of the product space ``X^m = (R^d)^m``.

A block vector is stored as a float array of shape ``(m, d)``: row ``i`` is
the block ``x_i``. All operators here are exact linear maps (up to rounding)
and never broadcast across mismatched shapes.
"""

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "block_vector",
    "diagonal",
    "shift",
    "proj_diagonal",
    "proj_diagonal_perp",
    "skew_T",
    "half_id_plus_T",
    "displacement",
    "inner",
    "norm",
]


def block_vector(data, m=None, d=None):
    """Validate ``data`` as a block vector and return a read-only copy.

    Parameters
    ----------
    data : array_like
        Nested sequence or array of shape ``(m, d)``.
    m, d : int, optional
        Expected block count and block dimension. A mismatch raises
        :class:`DimensionMismatchError`.

    Returns
    -------
    ndarray
        Float array of shape ``(m, d)`` with ``writeable=False``.
    """
    x = np.array(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise DimensionMismatchError(
            f"block vector must have shape (m, d) with m, d >= 1, got {x.shape}")
    if m is not None and x.shape[0] != m:
        raise DimensionMismatchError(f"expected m={m} blocks, got {x.shape[0]}")
    if d is not None and x.shape[1] != d:
        raise DimensionMismatchError(f"expected block dimension d={d}, got {x.shape[1]}")
    x.setflags(write=False)
    return x


def _check(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatchError(
            f"block vector must be 2-D (m, d), got shape {x.shape}")
    return x


def _check_pair(x, y):
    x, y = _check(x), _check(y)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def diagonal(point, m):
    """Expand a point of ``R^d`` to the diagonal vector ``(point, ..., point)``."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise DimensionMismatchError(f"diagonal point must be 1-D, got shape {point.shape}")
    if m < 1:
        raise DimensionMismatchError(f"block count must be >= 1, got {m}")
    return np.tile(point, (m, 1))


def shift(x):
    """Circular right shift ``(x_1, ..., x_m) -> (x_m, x_1, ..., x_{m-1})``."""
    return np.roll(_check(x), 1, axis=0)


def proj_diagonal(x):
    """Orthogonal projection onto the diagonal: every block becomes the mean."""
    x = _check(x)
    return np.broadcast_to(x.mean(axis=0), x.shape).copy()


def proj_diagonal_perp(x):
    """Orthogonal projection onto the complement of the diagonal."""
    x = _check(x)
    return x - x.mean(axis=0)


def skew_T(x):
    """Apply the skew operator ``T = (1/2m) sum_{k=1}^{m-1} (m - 2k) R^k``.

    ``T`` vanishes identically for ``m = 1`` and ``m = 2``.
    """
    x = _check(x)
    m = x.shape[0]
    out = np.zeros_like(x)
    for k in range(1, m):
        c = m - 2 * k
        if c:
            out += c * np.roll(x, k, axis=0)
    return out / (2.0 * m)


def half_id_plus_T(x):
    """Apply ``Id/2 + T``, the inverse of ``Id - R + 2 P_diag``."""
    x = _check(x)
    return 0.5 * x + skew_T(x)


def displacement(x):
    """Displacement ``x - R x``; its kernel is the diagonal."""
    x = _check(x)
    return x - np.roll(x, 1, axis=0)


def inner(x, y):
    """Product-space inner product ``sum_i <x_i, y_i>``."""
    x, y = _check_pair(x, y)
    return float(np.vdot(x, y))


def norm(x):
    """Product-space norm ``sqrt(sum_i ||x_i||^2)``."""
    return float(np.linalg.norm(_check(x)))
