"""Closed-form cycles of projections onto finitely many lines.

For lines ``C_i = {a_i + t_i b_i}`` a tuple ``u_i = a_i + t_i b_i`` is a
classical cycle iff ``<b_i, u_i - u_{i-1}> = 0`` for all ``i`` (indices mod
``m``), which is the square linear system ``A t = rhs`` assembled by
:func:`build_system`.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .catalog import CycleProblem, IndicatorLine
from .errors import ValidationError

__all__ = [
    "LineFamily",
    "LineCycleSolution",
    "build_system",
    "determinant_formula",
    "solve_line_cycles",
    "all_parallel",
    "SINGULAR_RTOL",
]

# |det A| <= SINGULAR_RTOL * prod ||b_i||^2 is treated as singular
SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class LineFamily:
    """Ordered lines given by anchors ``a_i`` and nonzero directions ``b_i``."""

    anchors: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        a = np.array(self.anchors, dtype=float)
        b = np.array(self.directions, dtype=float)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValidationError(
                f"anchors and directions must both have shape (m, d); got {a.shape}, {b.shape}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValidationError("line data must be finite")
        zero = np.flatnonzero(~b.any(axis=1))
        if zero.size:
            raise ValidationError(f"zero direction for line(s) {zero.tolist()}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "directions", b)

    @property
    def m(self):
        return self.anchors.shape[0]

    @property
    def d(self):
        return self.anchors.shape[1]

    @classmethod
    def from_problem(cls, problem):
        if not all(isinstance(p, IndicatorLine) for p in problem.pieces):
            raise ValidationError("analytic line cycles need every piece to be an IndicatorLine")
        return cls([p.anchor for p in problem.pieces], [p.direction for p in problem.pieces])

    def to_problem(self):
        return CycleProblem(tuple(IndicatorLine(a, b)
                                  for a, b in zip(self.anchors, self.directions)), self.d)


@dataclass(frozen=True)
class LineCycleSolution:
    matrix: np.ndarray
    rhs: np.ndarray
    determinant: float
    classification: str  # "Unique" or "InfiniteFamily"
    t: np.ndarray  # the unique solution, or the least-norm particular one
    nullspace: np.ndarray  # (k, m), empty for Unique
    points: np.ndarray  # cycle points u_i = a_i + t_i b_i, shape (m, d)

    @property
    def unique(self):
        return self.classification == "Unique"

    @property
    def gap_vector(self):
        return np.roll(self.points, 1, axis=0) - self.points


def _check_m(family):
    if family.m < 2:
        raise ValidationError("line cycles need m >= 2")


def build_system(family):
    """Assemble ``A`` and ``rhs`` of the cycle stationarity system.

    ``A`` has ``<b_i, b_i>`` on the diagonal, ``-<b_i, b_{i-1}>`` below it
    and ``-<b_1, b_m>`` in the top-right corner; ``rhs_i = <b_i, a_{i-1} - a_i>``
    (with ``a_0 = a_m``), so that ``A t = rhs``.
    """
    _check_m(family)
    a, b = family.anchors, family.directions
    m = family.m
    A = np.zeros((m, m))
    for i in range(m):
        A[i, i] = b[i] @ b[i]
        A[i, i - 1] = -(b[i] @ b[i - 1])
    rhs = np.array([b[i] @ (a[i - 1] - a[i]) for i in range(m)])
    return A, rhs


def determinant_formula(family):
    """``prod <b_i, b_i> - <b_1, b_m> prod_{i>=2} <b_i, b_{i-1}>``."""
    _check_m(family)
    b = family.directions
    m = family.m
    diag = np.prod([b[i] @ b[i] for i in range(m)])
    ring = (b[0] @ b[m - 1]) * np.prod([b[i] @ b[i - 1] for i in range(1, m)])
    return float(diag - ring)


def all_parallel(family, tol=1e-10):
    """Whether all directions are pairwise parallel, ``| <b_i^, b_j^> | >= 1 - tol``."""
    unit = family.directions / np.linalg.norm(family.directions, axis=1, keepdims=True)
    cos = np.abs(unit @ unit.T)
    return bool((cos >= 1.0 - tol).all())


def solve_line_cycles(family, threshold: Optional[float] = None):
    """Solve for the classical cycles of projections onto the lines.

    Returns the unique cycle when ``|det A|`` exceeds the scale-aware
    threshold, otherwise the least-norm solution of the (consistent)
    singular system together with a basis of its null space.
    """
    A, rhs = build_system(family)
    det = determinant_formula(family)
    if threshold is None:
        threshold = SINGULAR_RTOL * float(np.prod(np.sum(family.directions ** 2, axis=1)))
    if abs(det) > threshold:
        lu, piv = scipy.linalg.lu_factor(A)
        t = scipy.linalg.lu_solve((lu, piv), rhs)
        null = np.zeros((0, family.m))
        kind = "Unique"
    else:
        t = np.linalg.lstsq(A, rhs, rcond=None)[0]
        null = scipy.linalg.null_space(A, rcond=1e-10).T
        if null.shape[0] == 0:
            # numerically singular but rank-full at the SVD cutoff: keep the
            # smallest singular direction
            null = np.linalg.svd(A)[2][-1:]
        kind = "InfiniteFamily"
    points = family.anchors + t[:, None] * family.directions
    return LineCycleSolution(A, rhs, det, kind, t, null, points)
