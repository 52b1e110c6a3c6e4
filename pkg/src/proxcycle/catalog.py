"""Convex pieces ``f_i`` with proximal oracles and existence metadata.

Every piece is an immutable object living on ``R^d``. Indicator kinds are
projections (their prox ignores the step size); ``Quadratic`` and ``Linear``
are finite everywhere. Metadata flags are derived from the kind and its
parameters, never estimated numerically.
"""

import math
from dataclasses import dataclass, field
from typing import ClassVar, Optional

import numpy as np

from .errors import (ConvergenceError, DimensionMismatchError,
                     UnsupportedKindError, ValidationError)
from .product import block_vector

__all__ = [
    "PieceFlags",
    "ConvexPiece",
    "IndicatorAffineSubspace",
    "IndicatorLine",
    "IndicatorHalfspace",
    "IndicatorBall",
    "IndicatorBox",
    "IndicatorEpiExpShift",
    "Quadratic",
    "Linear",
    "CycleProblem",
    "prox",
    "normal_cone_contains",
    "prox_product",
    "check_blanket_assumption",
    "existence_diagnostic",
    "piece_from_dict",
    "PIECE_KINDS",
]

# bisection controls for the epigraph projection
EPI_TOL = 1e-13
EPI_MAX_ITER = 200


@dataclass(frozen=True)
class PieceFlags:
    """Symbolic properties of a piece used by the existence diagnostics."""

    coercive: bool
    supercoercive: bool
    bounded_domain: bool
    polyhedral: bool
    bounded_below: bool
    argmin_known: Optional[str] = None


def _vec(value, name, d=None):
    a = np.array(value, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D vector")
    if d is not None and a.size != d:
        raise DimensionMismatchError(f"{name} has dimension {a.size}, expected {d}")
    if np.isnan(a).any():
        raise ValidationError(f"{name} contains NaN")
    a.setflags(write=False)
    return a


def _finite(a, name):
    if not np.isfinite(a).all():
        raise ValidationError(f"{name} must be finite")
    return a


def _dist_to_ray(g, direction):
    """Distance from ``g`` to the cone ``{t * direction : t >= 0}``."""
    n = direction / np.linalg.norm(direction)
    t = max(0.0, float(g @ n))
    return float(np.linalg.norm(g - t * n))


class ConvexPiece:
    """Base class for a proper lsc convex function on ``R^d``.

    Subclasses implement :meth:`prox`, :meth:`value` and, for indicators,
    :meth:`normal_cone_contains`.
    """

    kind: ClassVar[str] = ""
    is_indicator: ClassVar[bool] = False

    @property
    def dim(self):
        raise NotImplementedError

    @property
    def flags(self):
        raise NotImplementedError

    def prox(self, v, gamma=1.0):
        raise NotImplementedError

    def value(self, u, tol=1e-9):
        raise NotImplementedError

    def normal_cone_contains(self, u, g, tol=1e-9):
        raise UnsupportedKindError(
            f"normal cone membership is only defined for indicator kinds, not {self.kind}")

    def params(self):
        raise NotImplementedError

    def to_dict(self):
        out = {"kind": self.kind}
        for key, val in self.params().items():
            out[key] = _jsonable(val)
        return out

    def _check_input(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{self.kind} lives in R^{self.dim}, got input of shape {v.shape}")
        return v

    def _indicator_value(self, u, tol):
        p = self.prox(u)
        return 0.0 if np.linalg.norm(p - np.asarray(u, dtype=float)) <= tol else math.inf


def _jsonable(val):
    if isinstance(val, np.ndarray):
        return [_jsonable(x) for x in val.tolist()]
    if isinstance(val, list):
        return [_jsonable(x) for x in val]
    if isinstance(val, float):
        if math.isinf(val):
            return "inf" if val > 0 else "-inf"
        return val
    return val


@dataclass(frozen=True, eq=False)
class IndicatorAffineSubspace(ConvexPiece):
    """Indicator of ``anchor + span(directions)``.

    ``directions`` may be empty (a single point) or linearly dependent.
    """

    anchor: np.ndarray
    directions: np.ndarray = None
    _basis: np.ndarray = field(init=False, repr=False)

    kind: ClassVar[str] = "IndicatorAffineSubspace"
    is_indicator: ClassVar[bool] = True

    def __post_init__(self):
        a = _finite(_vec(self.anchor, "anchor"), "anchor")
        dirs = np.array([] if self.directions is None else self.directions, dtype=float)
        if dirs.size == 0:
            dirs = np.zeros((0, a.size))
        if dirs.ndim != 2 or dirs.shape[1] != a.size:
            raise DimensionMismatchError("directions must be a list of vectors in R^d")
        _finite(dirs, "directions")
        dirs.setflags(write=False)
        if dirs.shape[0]:
            u, s, _ = np.linalg.svd(dirs.T, full_matrices=False)
            rank = int((s > 1e-12 * s[0]).sum())
            basis = u[:, :rank]
        else:
            basis = np.zeros((a.size, 0))
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "_basis", basis)

    @property
    def dim(self):
        return self.anchor.size

    @property
    def flags(self):
        point = self._basis.shape[1] == 0
        return PieceFlags(coercive=point, supercoercive=point, bounded_domain=point,
                          polyhedral=True, bounded_below=True,
                          argmin_known="the affine subspace itself")

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        q = self._basis
        return self.anchor + q @ (q.T @ (v - self.anchor))

    def value(self, u, tol=1e-9):
        return self._indicator_value(u, tol)

    def normal_cone_contains(self, u, g, tol=1e-9):
        u, g = self._check_input(u), self._check_input(g)
        if np.linalg.norm(self.prox(u) - u) > tol:
            return False
        return bool(np.linalg.norm(self._basis.T @ g) <= tol)

    def params(self):
        return {"anchor": self.anchor, "directions": self.directions}


@dataclass(frozen=True, eq=False)
class IndicatorLine(ConvexPiece):
    """Indicator of the line ``{anchor + t * direction : t in R}``."""

    anchor: np.ndarray
    direction: np.ndarray

    kind: ClassVar[str] = "IndicatorLine"
    is_indicator: ClassVar[bool] = True

    def __post_init__(self):
        a = _finite(_vec(self.anchor, "anchor"), "anchor")
        b = _finite(_vec(self.direction, "direction", a.size), "direction")
        if not np.any(b):
            raise ValidationError("zero direction: a line needs a nonzero direction vector")
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "direction", b)

    @property
    def dim(self):
        return self.anchor.size

    @property
    def flags(self):
        return PieceFlags(coercive=False, supercoercive=False, bounded_domain=False,
                          polyhedral=True, bounded_below=True,
                          argmin_known="the line itself")

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        b = self.direction
        return self.anchor + (b @ (v - self.anchor)) / (b @ b) * b

    def value(self, u, tol=1e-9):
        return self._indicator_value(u, tol)

    def normal_cone_contains(self, u, g, tol=1e-9):
        u, g = self._check_input(u), self._check_input(g)
        if np.linalg.norm(self.prox(u) - u) > tol:
            return False
        b = self.direction
        return bool(abs(b @ g) / np.linalg.norm(b) <= tol)

    def params(self):
        return {"anchor": self.anchor, "direction": self.direction}


@dataclass(frozen=True, eq=False)
class IndicatorHalfspace(ConvexPiece):
    """Indicator of ``{x : <normal, x> <= offset}``."""

    normal: np.ndarray
    offset: float

    kind: ClassVar[str] = "IndicatorHalfspace"
    is_indicator: ClassVar[bool] = True

    def __post_init__(self):
        n = _finite(_vec(self.normal, "normal"), "normal")
        if not np.any(n):
            raise ValidationError("halfspace normal must be nonzero")
        if not math.isfinite(float(self.offset)):
            raise ValidationError("halfspace offset must be finite")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    @property
    def flags(self):
        return PieceFlags(coercive=False, supercoercive=False, bounded_domain=False,
                          polyhedral=True, bounded_below=True,
                          argmin_known="the halfspace itself")

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        n = self.normal
        excess = n @ v - self.offset
        if excess <= 0:
            return v.copy()
        return v - excess / (n @ n) * n

    def value(self, u, tol=1e-9):
        return self._indicator_value(u, tol)

    def normal_cone_contains(self, u, g, tol=1e-9):
        u, g = self._check_input(u), self._check_input(g)
        n = self.normal
        slack = (self.offset - n @ u) / np.linalg.norm(n)
        if slack < -tol:
            return False
        if slack > tol:
            return bool(np.linalg.norm(g) <= tol)
        return _dist_to_ray(g, n) <= tol

    def params(self):
        return {"normal": self.normal, "offset": self.offset}


@dataclass(frozen=True, eq=False)
class IndicatorBall(ConvexPiece):
    """Indicator of the closed ball ``{x : ||x - center|| <= radius}``."""

    center: np.ndarray
    radius: float

    kind: ClassVar[str] = "IndicatorBall"
    is_indicator: ClassVar[bool] = True

    def __post_init__(self):
        c = _finite(_vec(self.center, "center"), "center")
        r = float(self.radius)
        if not (math.isfinite(r) and r >= 0):
            raise ValidationError(f"ball radius must be finite and >= 0, got {r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.center.size

    @property
    def flags(self):
        # a 1-D ball is an interval and a zero-radius ball is a point
        return PieceFlags(coercive=True, supercoercive=True, bounded_domain=True,
                          polyhedral=self.dim == 1 or self.radius == 0.0,
                          bounded_below=True, argmin_known="the ball itself")

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        diff = v - self.center
        dist = np.linalg.norm(diff)
        if dist <= self.radius:
            return v.copy()
        return self.center + (self.radius / dist) * diff

    def value(self, u, tol=1e-9):
        return self._indicator_value(u, tol)

    def normal_cone_contains(self, u, g, tol=1e-9):
        u, g = self._check_input(u), self._check_input(g)
        dist = np.linalg.norm(u - self.center)
        if dist > self.radius + tol:
            return False
        if dist < self.radius - tol:
            return bool(np.linalg.norm(g) <= tol)
        if dist == 0.0:
            # radius within tol of zero: the cone is everything
            return True
        return _dist_to_ray(g, u - self.center) <= tol

    def params(self):
        return {"center": self.center, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class IndicatorBox(ConvexPiece):
    """Indicator of ``{x : lower <= x <= upper}``; bounds may be infinite."""

    lower: np.ndarray
    upper: np.ndarray

    kind: ClassVar[str] = "IndicatorBox"
    is_indicator: ClassVar[bool] = True

    def __post_init__(self):
        lo = _vec(_parse_bounds(self.lower), "lower")
        hi = _vec(_parse_bounds(self.upper), "upper", lo.size)
        if np.isposinf(lo).any() or np.isneginf(hi).any():
            raise ValidationError("box lower bounds cannot be +inf nor upper bounds -inf")
        if (lo > hi).any():
            raise ValidationError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    @property
    def flags(self):
        bounded = bool(np.isfinite(self.lower).all() and np.isfinite(self.upper).all())
        return PieceFlags(coercive=bounded, supercoercive=bounded, bounded_domain=bounded,
                          polyhedral=True, bounded_below=True,
                          argmin_known="the box itself")

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        return np.clip(v, self.lower, self.upper)

    def value(self, u, tol=1e-9):
        return self._indicator_value(u, tol)

    def normal_cone_contains(self, u, g, tol=1e-9):
        u, g = self._check_input(u), self._check_input(g)
        if np.linalg.norm(self.prox(u) - u) > tol:
            return False
        at_lo = u - self.lower <= tol
        at_hi = self.upper - u <= tol
        # admissible sign of each coordinate of g
        viol = np.where(at_lo & at_hi, 0.0,
                        np.where(at_lo, np.maximum(g, 0.0),
                                 np.where(at_hi, np.minimum(g, 0.0), g)))
        return bool(np.linalg.norm(viol) <= tol)

    def params(self):
        return {"lower": self.lower, "upper": self.upper}


def _parse_bounds(values):
    out = []
    for x in np.atleast_1d(np.asarray(values, dtype=object)):
        if isinstance(x, str):
            key = x.strip().lower()
            if key in ("inf", "+inf", "infinity", "+infinity"):
                out.append(math.inf)
            elif key in ("-inf", "-infinity"):
                out.append(-math.inf)
            else:
                raise ValidationError(f"unrecognised bound {x!r}; use 'inf' or '-inf'")
        elif x is None:
            raise ValidationError("box bound is null; use 'inf' or '-inf' for no bound")
        else:
            out.append(float(x))
    return out


def _neg_exp(x):
    # exp(-x) saturating to +inf instead of raising
    return math.exp(-x) if x > -709.0 else math.inf


@dataclass(frozen=True, eq=False)
class IndicatorEpiExpShift(ConvexPiece):
    """Indicator of ``{(x, r) in R^2 : r >= exp(-x) + alpha}``."""

    alpha: float = 0.0

    kind: ClassVar[str] = "IndicatorEpiExpShift"
    is_indicator: ClassVar[bool] = True

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and a >= 0):
            raise ValidationError(f"alpha must be finite and >= 0, got {a}")
        object.__setattr__(self, "alpha", a)

    @property
    def dim(self):
        return 2

    @property
    def flags(self):
        return PieceFlags(coercive=False, supercoercive=False, bounded_domain=False,
                          polyhedral=False, bounded_below=True,
                          argmin_known="the epigraph itself")

    def boundary(self, x):
        return _neg_exp(x) + self.alpha

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        return np.array(self._project(float(v[0]), float(v[1])))

    def _project(self, x0, r0):
        alpha = self.alpha
        gap = _neg_exp(x0) + alpha - r0
        if gap <= 0:
            return x0, r0
        # The projection has abscissa x >= x0 with x - x0 <= distance to any
        # feasible point: (x0, r0 + gap) and (max(x0, 0), max(r0, 1 + alpha)).
        far = math.hypot(max(x0, 0.0) - x0, max(r0, 1.0 + alpha) - r0)
        lo, hi = x0, x0 + min(gap, far)

        # stationarity of the squared distance along the boundary curve
        def h(x):
            e = _neg_exp(x)
            if math.isinf(e):
                return -math.inf
            return x - x0 - (e + alpha - r0) * e

        for _ in range(EPI_MAX_ITER):
            mid = 0.5 * (lo + hi)
            if hi - lo <= EPI_TOL or mid in (lo, hi):
                break
            if h(mid) < 0:
                lo = mid
            else:
                hi = mid
        else:
            raise ConvergenceError(
                f"epigraph projection of ({x0}, {r0}) did not settle in {EPI_MAX_ITER} bisections")
        x = 0.5 * (lo + hi)
        return x, _neg_exp(x) + alpha

    def value(self, u, tol=1e-9):
        u = self._check_input(u)
        return 0.0 if u[1] >= self.boundary(u[0]) - tol else math.inf

    def normal_cone_contains(self, u, g, tol=1e-9):
        u, g = self._check_input(u), self._check_input(g)
        x, r = float(u[0]), float(u[1])
        p = self.prox(u)
        if np.linalg.norm(p - u) > tol:
            return False
        slack = r - self.boundary(x)
        if slack > tol:
            return bool(np.linalg.norm(g) <= tol)
        return _dist_to_ray(g, np.array([-_neg_exp(p[0]), -1.0])) <= tol

    def params(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True, eq=False)
class Quadratic(ConvexPiece):
    """``f(u) = (weight / 2) * ||u - anchor||^2``."""

    anchor: np.ndarray
    weight: float = 1.0

    kind: ClassVar[str] = "Quadratic"

    def __post_init__(self):
        a = _finite(_vec(self.anchor, "anchor"), "anchor")
        w = float(self.weight)
        if not (math.isfinite(w) and w > 0):
            raise ValidationError(f"quadratic weight must be finite and > 0, got {w}")
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "weight", w)

    @property
    def dim(self):
        return self.anchor.size

    @property
    def flags(self):
        return PieceFlags(coercive=True, supercoercive=True, bounded_domain=False,
                          polyhedral=False, bounded_below=True,
                          argmin_known="the anchor point")

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        gw = gamma * self.weight
        return (v + gw * self.anchor) / (1.0 + gw)

    def value(self, u, tol=1e-9):
        u = self._check_input(u)
        return 0.5 * self.weight * float((u - self.anchor) @ (u - self.anchor))

    def params(self):
        return {"anchor": self.anchor, "weight": self.weight}


@dataclass(frozen=True, eq=False)
class Linear(ConvexPiece):
    """``f(u) = <slope, u>``."""

    slope: np.ndarray

    kind: ClassVar[str] = "Linear"

    def __post_init__(self):
        object.__setattr__(self, "slope", _finite(_vec(self.slope, "slope"), "slope"))

    @property
    def dim(self):
        return self.slope.size

    @property
    def flags(self):
        flat = not np.any(self.slope)
        return PieceFlags(coercive=False, supercoercive=False, bounded_domain=False,
                          polyhedral=True, bounded_below=flat,
                          argmin_known="all of R^d" if flat else None)

    def prox(self, v, gamma=1.0):
        v = self._check_input(v)
        return v - gamma * self.slope

    def value(self, u, tol=1e-9):
        return float(self._check_input(u) @ self.slope)

    def params(self):
        return {"slope": self.slope}


PIECE_KINDS = {cls.kind: cls for cls in (
    IndicatorAffineSubspace, IndicatorLine, IndicatorHalfspace, IndicatorBall,
    IndicatorBox, IndicatorEpiExpShift, Quadratic, Linear)}


def piece_from_dict(spec):
    """Build a piece from its ``to_dict`` form (unknown keys are rejected)."""
    spec = dict(spec)
    try:
        kind = spec.pop("kind")
    except KeyError:
        raise ValidationError("piece is missing 'kind'") from None
    try:
        cls = PIECE_KINDS[kind]
    except KeyError:
        raise ValidationError(
            f"unknown piece kind {kind!r}; expected one of {sorted(PIECE_KINDS)}") from None
    try:
        return cls(**spec)
    except TypeError as exc:
        raise ValidationError(f"{kind}: {exc}") from None


@dataclass(frozen=True)
class CycleProblem:
    """An ordered family ``(f_1, ..., f_m)`` of pieces on a common ``R^d``."""

    pieces: tuple
    d: int

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValidationError("a cycle problem needs at least one piece")
        for i, p in enumerate(pieces):
            if not isinstance(p, ConvexPiece):
                raise ValidationError(f"piece {i} is not a ConvexPiece")
            if p.dim != self.d:
                raise DimensionMismatchError(
                    f"piece {i} ({p.kind}) lives in R^{p.dim}, problem has d={self.d}")
        object.__setattr__(self, "pieces", pieces)

    @property
    def m(self):
        return len(self.pieces)

    def check_block(self, x):
        return block_vector(x, self.m, self.d)


def prox(piece, gamma, v):
    """Proximal point of ``gamma * piece`` at ``v``."""
    if not gamma > 0:
        raise ValidationError(f"prox step must be > 0, got {gamma}")
    return piece.prox(v, gamma)


def normal_cone_contains(piece, u, g, tol=1e-9):
    """Whether ``g`` lies within ``tol`` of the normal cone of the set at ``u``."""
    return piece.normal_cone_contains(u, g, tol)


def prox_product(problem, gamma, v):
    """Blockwise prox of the separable sum ``f_1 + ... + f_m``."""
    if not gamma > 0:
        raise ValidationError(f"prox step must be > 0, got {gamma}")
    v = np.asarray(v, dtype=float)
    if v.shape != (problem.m, problem.d):
        raise DimensionMismatchError(
            f"expected block vector of shape {(problem.m, problem.d)}, got {v.shape}")
    return np.array([p.prox(vi, gamma) for p, vi in zip(problem.pieces, v)])


def check_blanket_assumption(problem):
    """Check sufficient conditions for ``dom f* meets the diagonal complement``.

    Returns a dict ``{"holds": bool, "reason": str}``. ``holds=False`` means
    none of the implemented sufficient conditions applies; the assumption
    itself is then unknown, not refuted.
    """
    flags = [p.flags for p in problem.pieces]
    if all(f.bounded_below for f in flags):
        if all(p.is_indicator for p in problem.pieces):
            return {"holds": True, "reason": "inf f_i = 0 for all i"}
        return {"holds": True, "reason": "inf f_i > -inf for all i"}
    for i, f in enumerate(flags):
        if f.supercoercive:
            why = "has a bounded domain" if f.bounded_domain else "is supercoercive"
            return {"holds": True, "reason": f"piece {i} ({problem.pieces[i].kind}) {why}"}
    # affine minorants: zero for bounded-below pieces, exact for Linear ones;
    # their slopes must sum to zero to lie in the diagonal complement
    if all(f.bounded_below or isinstance(p, Linear) for p, f in zip(problem.pieces, flags)):
        total = sum((p.slope for p in problem.pieces if isinstance(p, Linear)),
                    np.zeros(problem.d))
        scale = max(1.0, max(np.linalg.norm(p.slope) for p in problem.pieces
                             if isinstance(p, Linear)))
        if np.linalg.norm(total) <= 1e-12 * scale:
            return {"holds": True,
                    "reason": "linear minorant slopes sum to zero (affine minorant in the "
                              "diagonal complement)"}
    bad = [i for i, f in enumerate(flags) if not f.bounded_below]
    return {"holds": False,
            "reason": f"pieces {bad} are unbounded below and no sufficient condition "
                      "(bounded below, supercoercive piece, balanced affine minorants) "
                      "was verified; assumption unknown"}


def existence_diagnostic(problem):
    """Report whether a classical cycle is guaranteed by the implemented criteria.

    ``False`` means "not guaranteed", never "does not exist".
    """
    flags = [p.flags for p in problem.pieces]
    if all(f.bounded_below for f in flags):
        coercive = [i for i, f in enumerate(flags) if f.coercive]
        if coercive:
            i = coercive[0]
            return {"classical_cycle_guaranteed": True,
                    "reason": f"all pieces bounded below and piece {i} "
                              f"({problem.pieces[i].kind}) is coercive"}
    if all(f.polyhedral for f in flags):
        blanket = check_blanket_assumption(problem)
        if blanket["holds"]:
            return {"classical_cycle_guaranteed": True,
                    "reason": "all pieces polyhedral in finite dimension"}
        return {"classical_cycle_guaranteed": False,
                "reason": "all pieces polyhedral but properness of the infimal "
                          "convolution was not verified: " + blanket["reason"]}
    return {"classical_cycle_guaranteed": False,
            "reason": "no coercive piece with all pieces bounded below, and not all "
                      "pieces polyhedral"}
