"""Forward-backward solvers for classical and generalized cycles.

Two schemes are provided:

* :func:`naive_cycle_iterate` runs ``x <- Prox_{gamma f}((1 - gamma) x + gamma R x)``
  on the separable sum ``f`` itself. It finds a classical cycle when one
  exists; otherwise the iterates run off to infinity.
* :func:`generalized_solve` runs the relaxed scheme with the prox of
  ``g = cl(f inf-conv iota_diag)`` as backward step. Its gap sequence
  ``R x_n - x_n`` always converges to the unique generalized gap vector.
"""

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .catalog import IndicatorAffineSubspace, IndicatorLine, prox_product
from .errors import DimensionMismatchError, ValidationError
from .product import proj_diagonal_perp, shift, skew_T

__all__ = [
    "Status",
    "SolveConfig",
    "TraceRecord",
    "SolveReport",
    "naive_cycle_iterate",
    "prox_closure_infconv",
    "generalized_solve",
    "gap_vector_from_dual_identity",
    "cycle_residual",
]


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGENCE = "DivergenceDetected"


@dataclass(frozen=True)
class SolveConfig:
    """Step size, relaxation schedule and stopping controls.

    ``relaxation`` is either a constant or an explicit list of values; a
    list shorter than the run is continued with its last entry.
    """

    gamma: float = 0.5
    relaxation: Union[float, Sequence[float]] = 1.0
    max_outer_iters: int = 200_000
    outer_tol: float = 1e-9
    inner_tol: float = 1e-11
    inner_cap: int = 10_000
    divergence_threshold: float = 1e8

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must lie in (0, 1), got {self.gamma}")
        delta = 2.0 - self.gamma
        lams = self.relaxations()
        if not lams:
            raise ValidationError("relaxation list is empty")
        for lam in lams:
            if not 0.0 < lam < delta:
                raise ValidationError(
                    f"relaxation {lam} outside (0, 2 - gamma) = (0, {delta})")
        if int(self.max_outer_iters) < 1 or int(self.inner_cap) < 1:
            raise ValidationError("iteration caps must be positive")
        for name in ("outer_tol", "inner_tol", "divergence_threshold"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")

    def relaxations(self):
        if isinstance(self.relaxation, (int, float)):
            return [float(self.relaxation)]
        return [float(v) for v in self.relaxation]

    def relaxation_at(self, n):
        lams = self.relaxations()
        return lams[min(n, len(lams) - 1)]

    def to_dict(self):
        rel = self.relaxation if isinstance(self.relaxation, (int, float)) \
            else [float(v) for v in self.relaxation]
        return {"gamma": self.gamma, "relaxation": rel,
                "max_outer_iters": int(self.max_outer_iters),
                "outer_tol": self.outer_tol, "inner_tol": self.inner_tol,
                "inner_cap": int(self.inner_cap),
                "divergence_threshold": self.divergence_threshold}


class TraceRecord(NamedTuple):
    iter: int
    norm_x: float
    residual: float
    gap_change: float


@dataclass
class SolveReport:
    status: Status
    generalized_cycle: np.ndarray
    gap_vector: np.ndarray
    classical_cycle: Optional[np.ndarray]
    final_residual: float
    iterations: int
    trace: List[TraceRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    inner_cap_hits: int = 0
    last_iterate: Optional[np.ndarray] = None

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def cycle_residual(problem, z):
    """``max_i ||z_i - Prox_{f_i} z_{i-1}||``, the defect of ``z = Prox_f R z``."""
    z = np.asarray(z, dtype=float)
    return float(np.linalg.norm(z - prox_product(problem, 1.0, shift(z)), axis=1).max())


def _start(problem, x0):
    if x0 is None:
        return np.zeros((problem.m, problem.d))
    x0 = np.array(x0, dtype=float)
    if x0.shape != (problem.m, problem.d):
        raise DimensionMismatchError(
            f"start point has shape {x0.shape}, problem needs {(problem.m, problem.d)}")
    return x0


def naive_cycle_iterate(problem, config=None, x0=None):
    """Iterate ``x <- Prox_{gamma f}((1 - gamma) x + gamma R x)``.

    Stops when ``||x_{n+1} - x_n|| <= outer_tol`` (a classical cycle), when
    ``||x_n||`` exceeds ``divergence_threshold`` or at the iteration cap.
    Without convergence the reported gap is only the last estimate
    ``R x_n - x_n``.
    """
    config = config or SolveConfig()
    if problem.m < 2:
        raise ValidationError("cycle computations need m >= 2 pieces")
    x = _start(problem, x0)
    g = config.gamma
    trace = []
    status = Status.MAX_ITERS
    disp = shift(x) - x
    res = math.inf
    n = 0
    for n in range(1, int(config.max_outer_iters) + 1):
        x_new = prox_product(problem, g, (1.0 - g) * x + g * shift(x))
        res = float(np.linalg.norm(x_new - x))
        disp_new = shift(x_new) - x_new
        nx = float(np.linalg.norm(x_new))
        trace.append(TraceRecord(n, nx, res, float(np.linalg.norm(disp_new - disp))))
        x, disp = x_new, disp_new
        if not math.isfinite(nx) or nx > config.divergence_threshold:
            status = Status.DIVERGENCE
            break
        if res <= config.outer_tol:
            status = Status.CONVERGED
            break

    warnings = []
    if status is not Status.CONVERGED:
        warnings.append(
            "no classical cycle found; gap_vector is the last estimate R x_n - x_n, "
            "not an established limit")
    return SolveReport(
        status=status,
        generalized_cycle=proj_diagonal_perp(x),
        gap_vector=disp,
        classical_cycle=x.copy() if status is Status.CONVERGED else None,
        final_residual=res,
        iterations=n,
        trace=trace,
        warnings=warnings,
        last_iterate=x.copy(),
    )


class _InnerResult(NamedTuple):
    w: np.ndarray
    u: np.ndarray
    iterations: int
    capped: bool
    # momentum carried into the next call: extrapolation offset z - d and t
    offset: Optional[np.ndarray] = None
    t: float = 1.0


def _is_affine(problem):
    return all(isinstance(p, (IndicatorAffineSubspace, IndicatorLine)) for p in problem.pieces)


@functools.lru_cache(maxsize=64)
def _affine_system(problem):
    """Anchors, span matrix of ``C + diag`` and its pseudo-inverse."""
    m, d = problem.m, problem.d
    bases = []
    for p in problem.pieces:
        if isinstance(p, IndicatorLine):
            bases.append(p.direction.reshape(d, 1))
        else:
            bases.append(p._basis)
    k = sum(b.shape[1] for b in bases)
    M = np.zeros((m * d, k + d))
    col = 0
    for i, b in enumerate(bases):
        M[i * d:(i + 1) * d, col:col + b.shape[1]] = b
        col += b.shape[1]
        M[i * d:(i + 1) * d, k:] = np.eye(d)
    anchors = np.array([p.anchor for p in problem.pieces])
    return anchors, M, np.linalg.pinv(M), k


def _affine_prox(problem, v):
    anchors, M, M_pinv, k = _affine_system(problem)
    coef = M_pinv @ (v - anchors).ravel()
    w = anchors + (M @ coef).reshape(v.shape)
    u = anchors + (M[:, :k] @ coef[:k]).reshape(v.shape)
    return _InnerResult(w, u, 0, False)


INNER_METHODS = ("auto", "accelerated", "alternating", "lstsq")


def _infconv_prox(problem, gamma, v, inner_tol, inner_cap, warm=None, method="auto"):
    if method not in INNER_METHODS:
        raise ValidationError(f"unknown inner method {method!r}; expected one of {INNER_METHODS}")
    if method == "lstsq" or (method == "auto" and _is_affine(problem)):
        if not _is_affine(problem):
            raise ValidationError("least-squares inner prox needs affine indicator pieces")
        return _affine_prox(problem, v)

    # Alternating minimisation of gamma f(u) + 1/2 ||u + E d - v||^2: the
    # d-update is a 1/m gradient step on sum_i env_{gamma f_i}(v_i - d).
    # "accelerated" extrapolates d with restarted Nesterov momentum.
    momentum = method != "alternating"
    if warm is None:
        u, offset, t = prox_product(problem, gamma, v), None, 1.0
    else:
        u, offset, t = warm.u, warm.offset, warm.t
    d = (v - u).mean(axis=0)
    z = d if offset is None or not momentum else d + offset
    v_mean = v.mean(axis=0)
    w = u - u.mean(axis=0) + v_mean
    for k in range(1, int(inner_cap) + 1):
        u = prox_product(problem, gamma, v - z)
        d_new = (v - u).mean(axis=0)
        if momentum and float(np.dot(z - d_new, d_new - d)) <= 0.0:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            z = d_new + ((t - 1.0) / t_new) * (d_new - d)
            t = t_new
        else:
            z, t = d_new, 1.0
        d = d_new
        w_new = u - u.mean(axis=0) + v_mean
        step = float(np.linalg.norm(w_new - w))
        w = w_new
        if step <= inner_tol:
            return _InnerResult(w, u, k, False, z - d, t)
    return _InnerResult(w, u, int(inner_cap), True, z - d, t)


def prox_closure_infconv(problem, gamma, v, inner_tol=1e-11, inner_cap=10_000,
                         method="auto"):
    """Prox of ``gamma * cl(f inf-conv iota_diag)`` at ``v``.

    Parameters
    ----------
    problem : CycleProblem
    gamma : float
        Step size, ``> 0``.
    v : array_like, shape (m, d)
    inner_tol, inner_cap
        Stopping controls for the alternating minimisation over
        ``(u, d)``. Hitting the cap is not an error: the last iterate is
        returned.
    method : {"auto", "accelerated", "alternating", "lstsq"}
        ``"auto"`` uses a direct least-squares projection onto ``C + diag``
        when every piece is an affine indicator and ``"accelerated"``
        otherwise. ``"alternating"`` is plain alternating minimisation;
        ``"accelerated"`` adds restarted momentum to the ``d`` update, which
        matters when the infimum escapes to infinity.

    Returns
    -------
    ndarray, shape (m, d)
    """
    if not gamma > 0:
        raise ValidationError(f"prox step must be > 0, got {gamma}")
    v = np.asarray(v, dtype=float)
    if v.shape != (problem.m, problem.d):
        raise DimensionMismatchError(
            f"expected block vector of shape {(problem.m, problem.d)}, got {v.shape}")
    return _infconv_prox(problem, gamma, v, inner_tol, inner_cap, method=method).w


def generalized_solve(problem, config=None, x0=None, method="auto"):
    """Relaxed forward-backward iteration on ``g = cl(f inf-conv iota_diag)``.

    Each step computes ``y_n = (1 - gamma) x_n + gamma R x_n`` and
    ``x_{n+1} = x_n + lambda_n (Prox_{gamma g} y_n - x_n)``. The run stops
    when both the relative fixed-point residual and the change of the gap
    estimate ``R x_n - x_n`` drop below ``outer_tol``.

    The report carries ``x = P_{diag-perp} x_n`` (generalized cycle),
    ``y = R x_n - x_n`` (gap vector) and, when a point of ``x_n + diag``
    passes the cycle test after convergence, a classical cycle.
    """
    config = config or SolveConfig()
    if problem.m < 2:
        raise ValidationError("cycle computations need m >= 2 pieces")
    x = _start(problem, x0)
    g = config.gamma
    tol = config.outer_tol
    inner_tol = config.inner_tol
    warm = None
    trace = []
    status = Status.MAX_ITERS
    disp = shift(x) - x
    res = math.inf
    cap_hits = 0
    inner = None
    n = 0
    for n in range(1, int(config.max_outer_iters) + 1):
        y = (1.0 - g) * x + g * shift(x)
        inner = _infconv_prox(problem, g, y, inner_tol, config.inner_cap, warm=warm,
                              method=method)
        warm = inner
        cap_hits += inner.capped
        lam = config.relaxation_at(n - 1)
        x_new = x + lam * (inner.w - x)
        nx = float(np.linalg.norm(x))
        res = float(np.linalg.norm(x_new - x)) / max(1.0, nx)
        disp_new = shift(x_new) - x_new
        gap_change = float(np.linalg.norm(disp_new - disp))
        x, disp = x_new, disp_new
        trace.append(TraceRecord(n, float(np.linalg.norm(x)), res, gap_change))
        # vanishing inner error: tighten with the outer residual
        inner_tol = min(inner_tol, res / 10.0) if res > 0 else inner_tol
        if res <= tol and gap_change <= tol:
            status = Status.CONVERGED
            break

    warnings = []
    if cap_hits:
        warnings.append(
            f"inner prox hit its cap of {int(config.inner_cap)} iterations in "
            f"{cap_hits} outer steps; the backward step was inexact")
    z = None
    # near-cycles far out along an asymptote pass a residual test without
    # being limits, so recovery is only attempted on converged runs
    if status is Status.CONVERGED:
        # the C-component of the last backward step lies in x_n + diag
        u_aligned = inner.u + (x - inner.w).mean(axis=0)
        for cand in (x, u_aligned):
            if cycle_residual(problem, cand) <= tol * max(1.0, float(np.linalg.norm(cand))):
                z = cand.copy()
                break
    return SolveReport(
        status=status,
        generalized_cycle=proj_diagonal_perp(x),
        gap_vector=disp,
        classical_cycle=z,
        final_residual=res,
        iterations=n,
        trace=trace,
        warnings=warnings,
        inner_cap_hits=cap_hits,
        last_iterate=x.copy(),
    )


def gap_vector_from_dual_identity(y):
    """Generalized cycle recovered from the gap vector: ``-y/2 - T y``."""
    y = np.asarray(y, dtype=float)
    return -0.5 * y - skew_T(y)
