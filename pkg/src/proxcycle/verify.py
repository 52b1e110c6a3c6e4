"""Independent numerical checks on cycle and gap-vector outputs.

Every check returns :class:`Check` entries that carry the measured value and
the tolerance it was compared against, so reports never hide numerics.
"""

import itertools
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple

import numpy as np

from .engine import cycle_residual
from .errors import BudgetExceededError, DimensionMismatchError, ValidationError
from .product import proj_diagonal, shift, skew_T

__all__ = [
    "Check",
    "VerificationReport",
    "check_cycle",
    "check_gap_identities",
    "check_fixed_point_translation",
    "brute_force_cycle_search",
    "BruteForceResult",
    "BRUTE_FORCE_BUDGET",
]

BRUTE_FORCE_BUDGET = 10 ** 7


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    identity: str
    skipped: bool = False
    detail: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class VerificationReport:
    checks: List[Check] = field(default_factory=list)

    def add(self, *checks):
        self.checks.extend(checks)
        return self

    @property
    def passed(self):
        """All non-skipped checks passed."""
        return all(c.passed for c in self.checks if not c.skipped)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _entry(name, measured, tol, identity, detail=""):
    measured = float(measured)
    return Check(name, bool(measured <= tol), measured, float(tol), identity, False, detail)


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape != y.shape:
        raise DimensionMismatchError(f"expected two (m, d) arrays, got {x.shape} and {y.shape}")
    return x, y


def check_cycle(problem, z, tol):
    """Compare ``max_i ||z_i - Prox_{f_i} z_{i-1}||`` against ``tol``."""
    z = problem.check_block(z)
    return _entry("cycle", cycle_residual(problem, z), tol, "z_i = Prox_{f_i}(z_{i-1})")


def check_gap_identities(x, y, tol):
    """Check the linear relations between a generalized cycle ``x`` and gap ``y``.

    Returns four entries: ``||P_diag x||``, ``||P_diag y||``,
    ``||y - (R x - x)||`` and ``||x + y/2 + T y||``.
    """
    x, y = _pair(x, y)
    return [
        _entry("x_orthogonal_to_diagonal", np.linalg.norm(proj_diagonal(x)), tol,
               "P_diag x = 0"),
        _entry("y_orthogonal_to_diagonal", np.linalg.norm(proj_diagonal(y)), tol,
               "P_diag y = 0"),
        _entry("gap_is_displacement", np.linalg.norm(y - (shift(x) - x)), tol,
               "y = R x - x"),
        _entry("cycle_from_gap", np.linalg.norm(x + 0.5 * y + skew_T(y)), tol,
               "x = -y/2 - T y"),
    ]


def _settle_chain(problem, start, p, settle_tol, max_sweeps):
    """Iterate one full prox sweep starting after piece ``start``.

    Returns the settled point or ``None`` when the sweep does not settle.
    """
    m = problem.m
    order = [(start + k) % m for k in range(1, m + 1)]
    for _ in range(max_sweeps):
        q = p
        for j in order:
            q = problem.pieces[j].prox(q, 1.0)
        if np.linalg.norm(q - p) <= settle_tol:
            return q
        p = q
    return None


def check_fixed_point_translation(problem, z, y, samples=8, seed=0, tol=1e-7,
                                  radius=0.5, settle_tol=1e-8, max_sweeps=100_000):
    """Check that ``Prox_{f_{i+1}}`` translates ``F_i`` onto ``F_{i+1}`` by ``-y_{i+1}``.

    ``F_i`` is the fixed-point set of the sweep ``P_i o ... o P_1 o P_m o ...
    o P_{i+1}``. Sample points are random perturbations of ``z_i`` pushed
    into ``F_i`` by repeating the sweep until it moves less than
    ``settle_tol``. Each settled ``p`` must satisfy
    ``||Prox_{f_{i+1}}(p) - (p - y_{i+1})|| <= tol``.

    Parameters
    ----------
    problem : CycleProblem
    z : ndarray, shape (m, d)
        A classical cycle.
    y : ndarray, shape (m, d)
        Its gap vector ``R z - z``.
    samples : int
        Sample points per index ``i``.
    seed : int
        Seed of the perturbation generator.

    Returns
    -------
    Check
        Skipped (not failed) when some sweep does not settle.
    """
    z = problem.check_block(z)
    y = problem.check_block(y)
    if samples < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    m = problem.m
    worst = 0.0
    identity = "Prox_{f_{i+1}}(p) = p - y_{i+1} for p in F_i"
    for i in range(m):
        nxt = (i + 1) % m
        for _ in range(samples):
            p0 = z[i] + radius * rng.standard_normal(problem.d)
            p = _settle_chain(problem, i, p0, settle_tol, max_sweeps)
            if p is None:
                return Check("fixed_point_translation", False, float("nan"), float(tol),
                             identity, skipped=True,
                             detail=f"sweep for F_{i + 1} did not settle within "
                                    f"{max_sweeps} sweeps")
            err = np.linalg.norm(problem.pieces[nxt].prox(p, 1.0) - (p - y[nxt]))
            worst = max(worst, float(err))
    return _entry("fixed_point_translation", worst, tol, identity,
                  detail=f"{samples} samples per set, seed {seed}")


class BruteForceResult(NamedTuple):
    z: np.ndarray
    residual: float
    evaluations: int


def _minmax_step(V, D, chunk=64):
    """``W[s, c] = min_b max(V[s, b], D[b, c])`` and its argmin ``b``."""
    n = V.shape[0]
    W = np.empty((n, D.shape[1]))
    arg = np.empty((n, D.shape[1]), dtype=np.intp)
    for lo in range(0, n, chunk):
        block = np.maximum(V[lo:lo + chunk, :, None], D[None, :, :])
        arg[lo:lo + chunk] = block.argmin(axis=1)
        W[lo:lo + chunk] = np.take_along_axis(block, arg[lo:lo + chunk, None, :], 1)[:, 0]
    return W, arg


def brute_force_cycle_search(problem, lo, hi, steps, budget=BRUTE_FORCE_BUDGET):
    """Minimise the cycle residual over a tensor grid of ``[lo, hi]^(m d)``.

    The grid has ``steps`` points per axis. The minimum over all
    ``steps^(m d)`` grid block vectors is found exactly by a min-max dynamic
    program over the cyclic chain ``z_{i-1} -> z_i``, using the pairwise
    costs ``||g_b - Prox_{f_i} g_a||``.

    Raises
    ------
    BudgetExceededError
        If ``steps^(m d)`` exceeds ``budget``.
    """
    steps = int(steps)
    if steps < 2 or not hi > lo:
        raise ValidationError("need steps >= 2 and hi > lo")
    m, d = problem.m, problem.d
    if m < 2:
        raise ValidationError("cycle computations need m >= 2 pieces")
    total = steps ** (m * d)
    if total > budget:
        raise BudgetExceededError(
            f"grid has {steps}^{m * d} = {total} points, budget is {budget}")
    axis = np.linspace(lo, hi, steps)
    grid = np.array(list(itertools.product(axis, repeat=d)))
    # cost[i][a, b] = || grid[b] - Prox_{f_i}(grid[a]) ||
    cost = []
    for piece in problem.pieces:
        proj = np.array([piece.prox(g, 1.0) for g in grid])
        cost.append(np.linalg.norm(grid[None, :, :] - proj[:, None, :], axis=2))
    # start index s is z_{m-1}; V[s, j] is the best chain value ending at z_k = grid[j]
    V = cost[0]
    back = []
    for k in range(1, m - 1):
        V, arg = _minmax_step(V, cost[k])
        back.append(arg)
    closing = np.maximum(V, cost[m - 1].T)  # cost[m-1][j, s] closes z_{m-2} -> z_{m-1}=s
    s, j = np.unravel_index(np.argmin(closing), closing.shape)
    idx = [0] * m
    idx[m - 1] = s
    idx[m - 2] = j
    for k in range(m - 2, 0, -1):
        idx[k - 1] = back[k - 1][s, idx[k]]
    z = grid[idx]
    return BruteForceResult(z, float(cycle_residual(problem, z)), total)
