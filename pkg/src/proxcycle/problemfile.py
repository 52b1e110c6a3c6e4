"""JSON problem files: strict parsing and canonical emission.

A problem file looks like::

    {
      "schema": "proxcycle.problem/1",
      "ambient_dim": 2,
      "pieces": [
        {"kind": "IndicatorEpiExpShift", "params": {"alpha": 1.0}},
        {"kind": "IndicatorLine", "params": {"anchor": [0, 0], "direction": [1, 0]}}
      ],
      "mode": "generalized",
      "solver": {"gamma": 0.5, "relaxation": 1.0},
      "seed": 0,
      "verify": {"samples": 8, "brute_force": null},
      "outputs": {"report": null, "trace": null}
    }

Only ``schema``, ``ambient_dim`` and ``pieces`` are required. Unknown keys
anywhere are errors. A piece may carry ``"flags"``; every flag given must
equal the value derived from the kind and parameters.
"""

import json
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .catalog import PIECE_KINDS, CycleProblem, PieceFlags
from .engine import INNER_METHODS, SolveConfig
from .errors import ProxCycleError, ValidationError

__all__ = [
    "SCHEMA",
    "MODES",
    "ProblemFile",
    "ProblemFileError",
    "parse_problem",
    "parse_problem_text",
    "emit_problem",
    "bundled_problems",
    "resolve_problem_path",
]

SCHEMA = "proxcycle.problem/1"
MODES = ("naive", "generalized", "analytic_lines", "verify_all")

_TOP_KEYS = {"schema", "ambient_dim", "pieces", "mode", "solver", "seed", "verify", "outputs"}
_PIECE_KEYS = {"kind", "params", "flags"}
_SOLVER_KEYS = {f.name for f in fields(SolveConfig)} | {"inner_method"}
_VERIFY_KEYS = {"samples", "brute_force"}
_GRID_KEYS = {"lo", "hi", "steps"}
_OUTPUT_KEYS = {"report", "trace"}
_FLAG_KEYS = {f.name for f in fields(PieceFlags)}


class ProblemFileError(ValidationError):
    """A problem file is malformed or violates an invariant."""


@dataclass(frozen=True)
class ProblemFile:
    problem: CycleProblem
    mode: str = "generalized"
    solver: SolveConfig = field(default_factory=SolveConfig)
    inner_method: str = "auto"
    seed: int = 0
    samples: int = 8
    brute_force: Optional[dict] = None
    report_path: Optional[str] = None
    trace_path: Optional[str] = None
    flag_overrides: tuple = ()

    def with_overrides(self, **changes):
        """Copy with solver fields (``gamma``, ``relaxation``, ...) or file fields replaced."""
        solver_changes = {k: changes.pop(k) for k in list(changes) if k in _SOLVER_KEYS - {"inner_method"}}
        try:
            solver = replace(self.solver, **solver_changes)
        except ProxCycleError as exc:
            raise ProblemFileError(f"solver: {exc}") from None
        out = replace(self, solver=solver, **changes)
        if out.mode not in MODES:
            raise ProblemFileError(f"mode: expected one of {list(MODES)}, got {out.mode!r}")
        return out

    def to_dict(self):
        pieces = []
        overrides = self.flag_overrides or (None,) * self.problem.m
        for piece, flags in zip(self.problem.pieces, overrides):
            spec = piece.to_dict()
            entry = {"kind": spec.pop("kind"), "params": spec}
            if flags is not None:
                entry["flags"] = dict(flags)
            pieces.append(entry)
        solver = self.solver.to_dict()
        solver["inner_method"] = self.inner_method
        return {
            "schema": SCHEMA,
            "ambient_dim": self.problem.d,
            "pieces": pieces,
            "mode": self.mode,
            "solver": solver,
            "seed": self.seed,
            "verify": {"samples": self.samples,
                       "brute_force": None if self.brute_force is None else dict(self.brute_force)},
            "outputs": {"report": self.report_path, "trace": self.trace_path},
        }


def _fail(where, msg):
    raise ProblemFileError(f"{where}: {msg}" if where else msg)


def _expect_dict(obj, where, allowed, required=()):
    if not isinstance(obj, dict):
        _fail(where, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        _fail(where, f"unknown key(s) {unknown}; allowed: {sorted(allowed)}")
    missing = [k for k in required if k not in obj]
    if missing:
        _fail(where, f"missing required key(s) {missing}")
    return obj


def _int(value, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(where, f"must be >= {minimum}, got {value}")
    return value


def _parse_piece(entry, i, d):
    where = f"pieces[{i}]"
    _expect_dict(entry, where, _PIECE_KEYS, ("kind", "params"))
    kind = entry["kind"]
    if kind not in PIECE_KINDS:
        _fail(f"{where}.kind", f"unknown kind {kind!r}; expected one of {sorted(PIECE_KINDS)}")
    params = entry["params"]
    if not isinstance(params, dict):
        _fail(f"{where}.params", "expected an object")
    try:
        piece = PIECE_KINDS[kind](**params)
    except TypeError as exc:
        _fail(f"{where}.params", str(exc).replace("__init__()", kind))
    except ProxCycleError as exc:
        _fail(f"{where}.params", str(exc))
    if piece.dim != d:
        _fail(where, f"{kind} lives in R^{piece.dim} but ambient_dim is {d}")
    flags = entry.get("flags")
    if flags is not None:
        _expect_dict(flags, f"{where}.flags", _FLAG_KEYS)
        derived = piece.flags
        for key, val in flags.items():
            if getattr(derived, key) != val:
                _fail(f"{where}.flags.{key}",
                      f"override {val!r} contradicts the derived value {getattr(derived, key)!r}")
        flags = dict(sorted(flags.items()))
    return piece, flags


def parse_problem_text(text, source="<string>"):
    """Parse and validate problem-file text.

    Raises
    ------
    ProblemFileError
        With ``source:line:col`` for JSON syntax errors and a dotted field
        path for schema or invariant violations.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return _from_dict(data)
    except ProblemFileError as exc:
        raise ProblemFileError(f"{source}: {exc}") from None


def _from_dict(data):
    _expect_dict(data, "", _TOP_KEYS, ("schema", "ambient_dim", "pieces"))
    if data["schema"] != SCHEMA:
        _fail("schema", f"unsupported schema {data['schema']!r}; expected {SCHEMA!r}")
    d = _int(data["ambient_dim"], "ambient_dim", 1)
    raw = data["pieces"]
    if not isinstance(raw, list) or not raw:
        _fail("pieces", "expected a non-empty list")
    parsed = [_parse_piece(entry, i, d) for i, entry in enumerate(raw)]
    problem = CycleProblem(tuple(p for p, _ in parsed), d)
    overrides = tuple(f for _, f in parsed)
    if all(f is None for f in overrides):
        overrides = ()

    mode = data.get("mode", "generalized")
    if mode not in MODES:
        _fail("mode", f"expected one of {list(MODES)}, got {mode!r}")

    solver = dict(_expect_dict(data.get("solver", {}), "solver", _SOLVER_KEYS))
    inner_method = solver.pop("inner_method", "auto")
    if inner_method not in INNER_METHODS:
        _fail("solver.inner_method", f"expected one of {list(INNER_METHODS)}, got {inner_method!r}")
    for key in ("max_outer_iters", "inner_cap"):
        if key in solver:
            _int(solver[key], f"solver.{key}", 1)
    for key, val in solver.items():
        vals = val if key == "relaxation" and isinstance(val, list) else [val]
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(f"solver.{key}", f"expected a number, got {v!r}")
    if isinstance(solver.get("relaxation"), list):
        solver["relaxation"] = tuple(solver["relaxation"])
    try:
        config = SolveConfig(**solver)
    except ProxCycleError as exc:
        _fail("solver", str(exc))

    seed = _int(data.get("seed", 0), "seed", 0)
    verify = _expect_dict(data.get("verify", {}), "verify", _VERIFY_KEYS)
    samples = _int(verify.get("samples", 8), "verify.samples", 1)
    grid = verify.get("brute_force")
    if grid is not None:
        _expect_dict(grid, "verify.brute_force", _GRID_KEYS, ("lo", "hi", "steps"))
        _int(grid["steps"], "verify.brute_force.steps", 2)
        for key in ("lo", "hi"):
            if isinstance(grid[key], bool) or not isinstance(grid[key], (int, float)):
                _fail(f"verify.brute_force.{key}", f"expected a number, got {grid[key]!r}")
        if not grid["hi"] > grid["lo"]:
            _fail("verify.brute_force", "hi must exceed lo")
        grid = {"lo": grid["lo"], "hi": grid["hi"], "steps": grid["steps"]}
    outputs = _expect_dict(data.get("outputs", {}), "outputs", _OUTPUT_KEYS)
    for key, val in outputs.items():
        if val is not None and not isinstance(val, str):
            _fail(f"outputs.{key}", "expected a path string or null")

    return ProblemFile(problem=problem, mode=mode, solver=config, inner_method=inner_method,
                       seed=seed, samples=samples, brute_force=grid,
                       report_path=outputs.get("report"), trace_path=outputs.get("trace"),
                       flag_overrides=overrides)


def emit_problem(pf):
    """Canonical JSON text of a problem file (sorted keys, trailing newline)."""
    return json.dumps(pf.to_dict(), indent=2, sort_keys=True) + "\n"


def bundled_problems():
    """Names of the problem files shipped with the package."""
    root = resources.files("proxcycle") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_problem_path(name):
    """Return ``name`` if it is an existing file, else the bundled problem of that name."""
    path = Path(name)
    if path.is_file():
        return path
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    bundled = resources.files("proxcycle") / "data" / f"{stem}.json"
    if bundled.is_file():
        return Path(str(bundled))
    raise ProblemFileError(
        f"{name}: no such file and no bundled problem of that name "
        f"(bundled: {', '.join(bundled_problems())})")


def parse_problem(path):
    """Read and validate a problem file (a path or a bundled problem name)."""
    path = resolve_problem_path(path)
    return parse_problem_text(path.read_text(), str(path))
