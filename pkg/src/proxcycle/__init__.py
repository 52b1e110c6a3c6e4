"""Classical and generalized cycles of cyclic proximal maps.

Given convex functions ``f_1, ..., f_m`` on ``R^d``, a classical cycle is a
tuple ``z`` with ``z_i = Prox_{f_i}(z_{i-1})`` (indices mod ``m``). When no
such tuple exists the solvers still return the generalized cycle and the
unique gap vector.
"""

from .catalog import (PIECE_KINDS, ConvexPiece, CycleProblem, IndicatorAffineSubspace,
                      IndicatorBall, IndicatorBox, IndicatorEpiExpShift, IndicatorHalfspace,
                      IndicatorLine, Linear, PieceFlags, Quadratic, check_blanket_assumption,
                      existence_diagnostic, normal_cone_contains, piece_from_dict, prox,
                      prox_product)
from .engine import (SolveConfig, SolveReport, Status, TraceRecord, cycle_residual,
                     gap_vector_from_dual_identity, generalized_solve, naive_cycle_iterate,
                     prox_closure_infconv)
from .errors import (BudgetExceededError, ConvergenceError, DimensionMismatchError,
                     ProxCycleError, UnsupportedKindError, ValidationError)
from .lines import (LineCycleSolution, LineFamily, build_system, determinant_formula,
                    solve_line_cycles)
from .problemfile import ProblemFile, ProblemFileError, emit_problem, parse_problem
from .product import (block_vector, diagonal, displacement, half_id_plus_T, inner, norm,
                      proj_diagonal, proj_diagonal_perp, shift, skew_T)
from .verify import (VerificationReport, brute_force_cycle_search, check_cycle,
                     check_fixed_point_translation, check_gap_identities)

__all__ = [
    "BudgetExceededError",
    "ConvergenceError",
    "ConvexPiece",
    "CycleProblem",
    "DimensionMismatchError",
    "IndicatorAffineSubspace",
    "IndicatorBall",
    "IndicatorBox",
    "IndicatorEpiExpShift",
    "IndicatorHalfspace",
    "IndicatorLine",
    "LineCycleSolution",
    "LineFamily",
    "Linear",
    "PIECE_KINDS",
    "PieceFlags",
    "ProblemFile",
    "ProblemFileError",
    "ProxCycleError",
    "Quadratic",
    "SolveConfig",
    "SolveReport",
    "Status",
    "TraceRecord",
    "UnsupportedKindError",
    "ValidationError",
    "VerificationReport",
    "block_vector",
    "brute_force_cycle_search",
    "build_system",
    "check_blanket_assumption",
    "check_cycle",
    "check_fixed_point_translation",
    "check_gap_identities",
    "cycle_residual",
    "determinant_formula",
    "diagonal",
    "displacement",
    "emit_problem",
    "existence_diagnostic",
    "gap_vector_from_dual_identity",
    "generalized_solve",
    "half_id_plus_T",
    "inner",
    "naive_cycle_iterate",
    "norm",
    "normal_cone_contains",
    "parse_problem",
    "piece_from_dict",
    "proj_diagonal",
    "proj_diagonal_perp",
    "prox",
    "prox_closure_infconv",
    "prox_product",
    "shift",
    "skew_T",
    "solve_line_cycles",
]

__version__ = "0.1.0"
