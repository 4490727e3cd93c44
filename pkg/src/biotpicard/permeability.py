"""Permeability laws ``k(fluid content)`` bounded in ``[k1, k2]``."""

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import ConfigurationError

KINDS = ("constant", "clamped-exponential", "logistic", "user-table")


@dataclass(frozen=True, eq=False)
class PermeabilityLaw:
    """A continuous permeability function with lower bound ``k1 > 0`` and upper bound ``k2``.

    Use the constructors :meth:`constant`, :meth:`clamped_exponential`,
    :meth:`logistic` and :meth:`table` rather than the raw initializer.
    Evaluation always clips to ``[k1, k2]``.
    """

    kind: str
    k1: float
    k2: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown permeability kind {self.kind!r}")
        if not (np.isfinite(self.k1) and self.k1 > 0):
            raise ConfigurationError(f"permeability lower bound k1 must be > 0, got {self.k1}")
        if not (np.isfinite(self.k2) and self.k2 >= self.k1):
            raise ConfigurationError(
                f"permeability bounds need k2 >= k1 > 0, got k1={self.k1}, k2={self.k2}"
            )

    @classmethod
    def constant(cls, value):
        return cls("constant", float(value), float(value), {"value": float(value)})

    @classmethod
    def clamped_exponential(cls, k1, k2, k0=1.0, beta=1.0):
        """``clip(k0 * exp(beta * x), k1, k2)``."""
        if k0 <= 0:
            raise ConfigurationError("clamped-exponential needs k0 > 0")
        return cls("clamped-exponential", float(k1), float(k2), {"k0": float(k0), "beta": float(beta)})

    @classmethod
    def logistic(cls, k1, k2, beta=1.0, center=0.0):
        """``k1 + (k2 - k1) / (1 + exp(-beta * (x - center)))``."""
        return cls("logistic", float(k1), float(k2), {"beta": float(beta), "center": float(center)})

    @classmethod
    def table(cls, xs, ks, k1=None, k2=None):
        """Piecewise-linear interpolation of tabulated values, constant outside the table."""
        xs = np.asarray(xs, dtype=float)
        ks = np.asarray(ks, dtype=float)
        if xs.ndim != 1 or xs.shape != ks.shape or xs.size < 2:
            raise ConfigurationError("user-table needs matching 1D arrays with at least two points")
        if np.any(np.diff(xs) <= 0):
            raise ConfigurationError("user-table abscissae must be strictly increasing")
        k1 = float(ks.min()) if k1 is None else float(k1)
        k2 = float(ks.max()) if k2 is None else float(k2)
        return cls("user-table", k1, k2, {"xs": xs, "ks": ks})

    @property
    def lipschitz_constant(self):
        p = self.params
        if self.kind == "constant":
            return 0.0
        if self.kind == "clamped-exponential":
            return abs(p["beta"]) * self.k2
        if self.kind == "logistic":
            return abs(p["beta"]) * (self.k2 - self.k1) / 4.0
        slopes = np.abs(np.diff(p["ks"]) / np.diff(p["xs"]))
        return float(slopes.max())

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "constant":
            raw = np.full_like(x, p["value"])
        elif self.kind == "clamped-exponential":
            with np.errstate(over="ignore"):
                raw = p["k0"] * np.exp(p["beta"] * x)
        elif self.kind == "logistic":
            with np.errstate(over="ignore"):
                raw = self.k1 + (self.k2 - self.k1) / (1.0 + np.exp(-p["beta"] * (x - p["center"])))
        else:
            raw = np.interp(x, p["xs"], p["ks"])
        return np.clip(raw, self.k1, self.k2)

    def symbolic(self, x):
        """The law as a sympy expression in ``x`` (used to manufacture exact sources)."""
        p = self.params
        if self.kind == "constant":
            return sp.Float(p["value"])
        if self.kind == "clamped-exponential":
            return sp.Min(sp.Max(p["k0"] * sp.exp(p["beta"] * x), self.k1), self.k2)
        if self.kind == "logistic":
            return self.k1 + (self.k2 - self.k1) / (1 + sp.exp(-p["beta"] * (x - p["center"])))
        raise ConfigurationError("user-table laws have no symbolic form")

    def to_dict(self):
        p = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()}
        return {"kind": self.kind, "k1": self.k1, "k2": self.k2, **p}

    @classmethod
    def from_dict(cls, spec):
        spec = dict(spec)
        kind = spec.pop("kind", None)
        try:
            if kind == "constant":
                value = spec.pop("value", spec.pop("k1", None))
                spec.pop("k2", None)
                law = cls.constant(value)
            elif kind == "clamped-exponential":
                law = cls.clamped_exponential(spec.pop("k1"), spec.pop("k2"),
                                              spec.pop("k0", 1.0), spec.pop("beta", 1.0))
            elif kind == "logistic":
                law = cls.logistic(spec.pop("k1"), spec.pop("k2"),
                                   spec.pop("beta", 1.0), spec.pop("center", 0.0))
            elif kind == "user-table":
                law = cls.table(spec.pop("xs"), spec.pop("ks"), spec.pop("k1", None), spec.pop("k2", None))
            else:
                raise ConfigurationError(f"unknown permeability kind {kind!r}")
        except KeyError as exc:
            raise ConfigurationError(f"law: missing field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ConfigurationError(f"law: {exc}") from None
        if spec:
            raise ConfigurationError(f"law: unknown keys {sorted(spec)}")
        return law


def shipped_laws():
    """Representative member of every law kind, used by the property batteries."""
    return {
        "constant": PermeabilityLaw.constant(1.0),
        "clamped-exponential": PermeabilityLaw.clamped_exponential(0.5, 2.0, 1.0, 1.0),
        "logistic": PermeabilityLaw.logistic(0.2, 3.0, 4.0, 0.0),
        "user-table": PermeabilityLaw.table([-1.0, 0.0, 0.5, 2.0], [0.3, 1.0, 1.5, 0.8]),
    }
