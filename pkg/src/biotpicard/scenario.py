"""Problem description and its JSON schema.

A scenario file is a JSON object::

    {
      "dimension": 2, "n": 16, "T": 1.0, "dt": 0.0625, "c0": 1.0,
      "law": {"kind": "clamped-exponential", "k1": 0.5, "k2": 2.0, "k0": 1.0, "beta": 1.0},
      "sources": {"S": "sin(pi*x)*sin(pi*y)", "F": ["0", "t*x*(1-x)"], "d0": "0"},
      "solver": {"picard_tol": 1e-8, "max_iters": 50, "linear_tol": 1e-10,
                 "theta": 1.0, "initial_guess": "d0"},
      "snapshot_times": [0.5, 1.0],
      "mms": {...}, "limit": {...}
    }

Only ``dimension``, ``n``, ``T``, ``dt``, ``c0`` and ``law`` are required.
Unknown keys are rejected at every level.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .expressions import Expression, VectorExpression, parse_expression
from .permeability import PermeabilityLaw

DEFAULTS = {"picard_tol": 1e-8, "max_iters": 50, "linear_tol": 1e-10, "theta": 1.0, "initial_guess": "d0"}
TOP_KEYS = {"dimension", "n", "T", "dt", "c0", "law", "sources", "solver", "snapshot_times", "mms", "limit"}
SOURCE_KEYS = {"S", "F", "F_t", "d0"}
MMS_KEYS = {"p", "u", "mesh_ladder", "dt_factor", "temporal_n", "dt_ladder", "picard_tol"}
LIMIT_KEYS = {"c0_ladder"}


@dataclass(frozen=True, eq=False)
class Scenario:
    """Full problem description.

    Sources are callables of ``(points, t)`` (``d0`` of ``points``) or None
    for zero data.  ``F`` returns shape (n_points, dimension).
    """

    dimension: int
    n: int
    T: float
    dt: float
    c0: float
    law: PermeabilityLaw
    S: object = None
    F: object = None
    F_t: object = None
    d0: object = None
    picard_tol: float = DEFAULTS["picard_tol"]
    max_iters: int = DEFAULTS["max_iters"]
    linear_tol: float = DEFAULTS["linear_tol"]
    theta: float = DEFAULTS["theta"]
    initial_guess: str = DEFAULTS["initial_guess"]
    lagged_k: bool = False
    snapshot_times: tuple = ()
    mms: dict = field(default_factory=dict)
    limit: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.dimension!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n!r}")
        if not self.T > 0:
            raise ConfigurationError(f"T must be positive, got {self.T}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(f"dt = {self.dt} does not divide T = {self.T}")
        if not self.c0 >= 0:
            raise ConfigurationError(f"c0 must be non-negative, got {self.c0}")
        if not isinstance(self.law, PermeabilityLaw):
            raise ConfigurationError("law must be a PermeabilityLaw")
        if not self.picard_tol > 0:
            raise ConfigurationError("picard_tol must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigurationError("max_iters must be a positive integer")
        if not self.linear_tol > 0:
            raise ConfigurationError("linear_tol must be positive")
        if not 0 < self.theta <= 1:
            raise ConfigurationError(f"damping theta must lie in (0, 1], got {self.theta}")
        if self.initial_guess not in ("d0", "zero"):
            raise ConfigurationError("initial_guess must be 'd0' or 'zero'")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def with_(self, **changes):
        return replace(self, **changes)


def _require_number(spec, key, kind=float):
    if key not in spec:
        raise ConfigurationError(f"missing required field {key!r}")
    value = spec[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"field {key!r} must be a number")
    if kind is int and int(value) != value:
        raise ConfigurationError(f"field {key!r} must be an integer")
    return kind(value)


def _check_keys(spec, allowed, where):
    if not isinstance(spec, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}")


def scenario_from_dict(spec):
    """Validate a decoded JSON object and build a :class:`Scenario`."""
    _check_keys(spec, TOP_KEYS, "scenario")
    dimension = _require_number(spec, "dimension", int)
    if "law" not in spec:
        raise ConfigurationError("missing required field 'law'")
    law = PermeabilityLaw.from_dict(spec["law"])

    sources = spec.get("sources", {})
    _check_keys(sources, SOURCE_KEYS, "sources")
    parsed = {}
    for key in ("S", "d0"):
        if key in sources:
            parsed[key] = parse_expression(sources[key])
    for key in ("F", "F_t"):
        if key in sources:
            comps = sources[key]
            if not isinstance(comps, list) or len(comps) != dimension:
                raise ConfigurationError(f"sources.{key} must be a list of {dimension} expressions")
            parsed[key] = VectorExpression(comps)
    if "d0" in parsed and parsed["d0"].uses_time():
        raise ConfigurationError("sources.d0 must not depend on t")

    solver = spec.get("solver", {})
    _check_keys(solver, set(DEFAULTS), "solver")
    options = {**DEFAULTS, **solver}

    mms = spec.get("mms", {})
    _check_keys(mms, MMS_KEYS, "mms")
    limit = spec.get("limit", {})
    _check_keys(limit, LIMIT_KEYS, "limit")

    snaps = spec.get("snapshot_times", [])
    if not isinstance(snaps, list) or not all(isinstance(s, (int, float)) for s in snaps):
        raise ConfigurationError("snapshot_times must be a list of numbers")

    return Scenario(
        dimension=dimension,
        n=_require_number(spec, "n", int),
        T=_require_number(spec, "T"),
        dt=_require_number(spec, "dt"),
        c0=_require_number(spec, "c0"),
        law=law,
        S=parsed.get("S"),
        F=parsed.get("F"),
        F_t=parsed.get("F_t"),
        d0=parsed.get("d0"),
        picard_tol=float(options["picard_tol"]),
        max_iters=options["max_iters"],
        linear_tol=float(options["linear_tol"]),
        theta=float(options["theta"]),
        initial_guess=options["initial_guess"],
        snapshot_times=tuple(float(s) for s in snaps),
        mms=dict(mms),
        limit=dict(limit),
    )


def parse_scenario(path):
    """Read and validate a scenario JSON file."""
    with open(path) as fh:
        text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(spec)


def expression_source(obj):
    """Source text of a parsed expression source, for provenance output."""
    if isinstance(obj, Expression):
        return obj.source
    if isinstance(obj, VectorExpression):
        return [c.source for c in obj.components]
    return None if obj is None else repr(obj)
