"""Shared domain types and the global scheme-parameter formulas.

Every scheme in the family is parametrized by three dimensionless constants
(d_ell, d_z, d_delta) which scale into concrete parameters via

    ell   = ceil(d_ell * c0^2 * ln(n/eps1))      (codelength, positions)
    Z     = d_z * c0 * ln(n/eps1)                (accusation threshold)
    delta = 1 / (d_delta * c0^(4/3))             (bias cutoff)

ell is rounded up to an integer (positions are discrete); Z and delta stay
real.  All types are immutable values and serialize to/from plain JSON
documents so optimizer output can be persisted and replayed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

VARIANTS = ("static", "dynamic", "weakly-dynamic-A", "weakly-dynamic-B",
            "universal")


class InfeasibleError(ValueError):
    """No tuning constants satisfy the scheme's feasibility conditions."""


def eta(n: int, eps1: float, eps2: float) -> float:
    """Log ratio of the error budgets: ln(eps2) / ln(eps1/n).

    Equals ln(1/eps2) / ln(n/eps1); finite and positive for eps1/n < 1 and
    eps2 < 1.  Decreasing in n for fixed error budgets.
    """
    if not (0.0 < eps1 and 0.0 < eps2 < 1.0 and eps1 < n):
        raise ValueError("need 0 < eps1 < n and 0 < eps2 < 1")
    return math.log(1.0 / eps2) / math.log(n / eps1)


@dataclass(frozen=True)
class ProblemInstance:
    """A tracing problem: user count, error budgets, coalition bound, delay."""

    n: int
    eps1: float
    eps2: float
    c0: int
    B: int = 0
    variant: str = "static"

    def __post_init__(self):
        errs = self.validation_errors()
        if errs:
            raise ValueError("; ".join(errs))

    def validation_errors(self) -> list[str]:
        errs = []
        if self.n < 2:
            errs.append(f"n must be >= 2, got {self.n}")
        if not 0.0 < self.eps1 < 1.0:
            errs.append(f"eps1 must be in (0,1), got {self.eps1}")
        if not 0.0 < self.eps2 < 1.0:
            errs.append(f"eps2 must be in (0,1), got {self.eps2}")
        if not 2 <= self.c0 <= self.n:
            errs.append(f"c0 must satisfy 2 <= c0 <= n, got {self.c0}")
        if self.variant not in VARIANTS:
            errs.append(f"unknown variant {self.variant!r}")
        if self.B < 0:
            errs.append(f"B must be >= 0, got {self.B}")
        weakly = self.variant.startswith("weakly")
        if weakly and self.B < 1:
            errs.append("weakly dynamic variants need B >= 1")
        if not weakly and self.B != 0:
            errs.append("B is only meaningful for weakly dynamic variants")
        return errs

    @property
    def eta(self) -> float:
        return eta(self.n, self.eps1, self.eps2)

    @property
    def log_ratio(self) -> float:
        """ln(n/eps1), the scale every parameter formula multiplies by."""
        return math.log(self.n / self.eps1)


@dataclass(frozen=True)
class TuningConstants:
    """Optimizer output: the three constants plus the feasibility certificate.

    (a, b) are the witnesses under which the soundness/completeness margins
    were evaluated; margins >= 0 certifies feasibility.  A finite optimal
    d_ell requires lambda_b > lambda_a.
    """

    d_ell: float
    d_z: float
    d_delta: float
    a: float
    b: float
    lambda_a: float
    lambda_b: float
    soundness_margin: float
    completeness_margin: float

    def __post_init__(self):
        if min(self.d_ell, self.d_z, self.d_delta, self.a, self.b) <= 0.0:
            raise ValueError("constants and witnesses must be positive")
        if self.soundness_margin < 0.0 or self.completeness_margin < 0.0:
            raise ValueError(
                "margins must be >= 0 (got soundness=%g, completeness=%g)"
                % (self.soundness_margin, self.completeness_margin))
        if not self.lambda_b > self.lambda_a:
            raise ValueError("lambda_b must exceed lambda_a")


@dataclass(frozen=True)
class SchemeParameters:
    """Concrete per-scheme numbers derived from instance + constants."""

    ell: int
    Z: float
    delta: float
    instance: ProblemInstance
    constants: TuningConstants

    @property
    def max_position_score(self) -> float:
        """Largest single-position score magnitude, sqrt((1-delta)/delta)."""
        return math.sqrt((1.0 - self.delta) / self.delta)


def derive_scheme_params(inst: ProblemInstance,
                         tc: TuningConstants) -> SchemeParameters:
    """Scale tuning constants into (ell, Z, delta) for an instance.

    Rejects constants whose cutoff would not leave a nonempty bias interval
    (delta must land strictly inside (0, 1/2)).
    """
    if min(tc.d_ell, tc.d_z, tc.d_delta) <= 0.0:
        raise ValueError("tuning constants must be positive")
    L = inst.log_ratio
    ell = math.ceil(tc.d_ell * inst.c0 ** 2 * L)
    Z = tc.d_z * inst.c0 * L
    delta = 1.0 / (tc.d_delta * inst.c0 ** (4.0 / 3.0))
    if not 0.0 < delta < 0.5:
        raise ValueError(
            f"cutoff delta={delta:g} outside (0, 1/2); d_delta too small")
    return SchemeParameters(ell=ell, Z=Z, delta=delta, instance=inst,
                            constants=tc)


@dataclass(frozen=True)
class LadderEntry:
    """One coalition size of a universal ladder."""

    c: int
    eps1_c: float
    eta_c: float
    ell: int
    Z: float
    delta: float
    constants: TuningConstants


@dataclass(frozen=True)
class UniversalLadder:
    """Per-coalition-size parameters sharing one codeword stream.

    The per-size soundness budgets must sum to at most the global eps1; each
    entry's constants satisfy the dynamic-scheme conditions at its own budget.
    """

    n: int
    eps1: float
    eps2: float
    c_grid: tuple[int, ...]
    entries: tuple[LadderEntry, ...]

    def __post_init__(self):
        if tuple(sorted(set(self.c_grid))) != self.c_grid:
            raise ValueError("c_grid must be strictly increasing")
        if sum(e.eps1_c for e in self.entries) > self.eps1 * (1 + 1e-12):
            raise ValueError("per-size soundness budgets exceed eps1")

    @property
    def c_max(self) -> int:
        return self.c_grid[-1]

    def entry(self, c: int) -> LadderEntry:
        for e in self.entries:
            if e.c == c:
                return e
        raise KeyError(f"no ladder entry for c={c}")


# --- JSON (de)serialization ------------------------------------------------

def to_dict(obj) -> dict:
    """Plain-dict form of any of the model types (canonical field names)."""
    d = asdict(obj)
    d["__type__"] = type(obj).__name__
    return d


def _strip(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != "__type__"}


def from_dict(d: dict):
    """Inverse of :func:`to_dict`."""
    kind = d.get("__type__")
    if kind == "ProblemInstance":
        return ProblemInstance(**_strip(d))
    if kind == "TuningConstants":
        return TuningConstants(**_strip(d))
    if kind == "SchemeParameters":
        d = _strip(d)
        d["instance"] = ProblemInstance(**_strip(d["instance"]))
        d["constants"] = TuningConstants(**_strip(d["constants"]))
        return SchemeParameters(**d)
    if kind == "LadderEntry":
        d = _strip(d)
        d["constants"] = TuningConstants(**_strip(d["constants"]))
        return LadderEntry(**d)
    if kind == "UniversalLadder":
        d = _strip(d)
        d["c_grid"] = tuple(d["c_grid"])
        d["entries"] = tuple(
            from_dict({**e, "__type__": "LadderEntry"}) for e in d["entries"])
        return UniversalLadder(**d)
    raise ValueError(f"cannot deserialize {kind!r}")


def dumps(obj, **kw) -> str:
    return json.dumps(to_dict(obj), **kw)


def loads(text: str):
    return from_dict(json.loads(text))
