"""Feasible, codelength-minimizing tuning constants for each scheme variant.

Each variant pairs a soundness condition with a completeness condition:

    soundness:     a * (d_z - lambda_a * d_ell) >= R_S
    completeness:  b * (lambda_b * d_ell - d_z) >= R_C

with witnesses a, b > 0 and

    lambda_a = a * h(a * sqrt(d_delta) * c0^(-1/3))
    lambda_b = 2/pi - (4 / (d_delta pi)) c0^(-1/3) - b h(b sqrt(d_delta)) c0^(-2/3)
    h(x)     = (e^x - 1 - x) / x^2

The right-hand sides per variant (L = ln(n/eps1)):

    S   -> R_S = 1                          (static soundness)
    S'  -> R_S = 1 + ln(2)/L                (all dynamic variants)
    C   -> R_C = eta * c0^(-1/3)
    C'  -> R_C = (eta + (ln2 +   b sqrt(d_delta))/L) * c0^(-1/3)
    C'' -> R_C = (eta + (ln2 + B b sqrt(d_delta))/L) * c0^(-1/3)

C' is C'' with B = 1.  Both conditions are monotone in d_z in opposite
directions, so at the optimum both bind; eliminating (d_ell, d_z) gives

    d_ell = (R_S/a + R_C/b) / (lambda_b - lambda_a),
    d_z   = R_S/a + lambda_a * d_ell,

and the remaining scalar objective is minimized over (a, b, d_delta) in log
space by multi-start coordinate descent with golden-section line searches
(the landscape is smooth and empirically unimodal; no derivatives needed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (InfeasibleError, LadderEntry, ProblemInstance,
                    SchemeParameters, TuningConstants, UniversalLadder,
                    derive_scheme_params, eta)

_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_LN2 = math.log(2.0)

# Condition pairs per scheme variant.  Weakly-dynamic-A runs with the plain
# dynamic constants (its extra cost is B*c0 disregarded positions, not a
# different optimization problem); universal ladder entries are dynamic
# schemes at their own eps1 budget.
_CONDITIONS = {
    "static": ("S", "C"),
    "dynamic": ("S'", "C'"),
    "weakly-dynamic-A": ("S'", "C'"),
    "weakly-dynamic-B": ("S'", "C''"),
    "universal": ("S'", "C'"),
}


def h(x: float) -> float:
    """(e^x - 1 - x) / x^2, extended by the limit 1/2 at x = 0.

    Strictly increasing from (0, inf) onto (1/2, inf).  Small arguments use
    the series sum_k x^k/(k+2)! to dodge the cancellation in the naive form.
    """
    if x < 0.0:
        raise ValueError("h is defined for x >= 0")
    if x < 0.125:
        acc, term = 0.0, 1.0
        fact = 2.0
        for k in range(14):
            acc += term / fact
            term *= x
            fact *= k + 3
        return acc
    return (math.expm1(x) - x) / (x * x)


def _h_naive(x: float) -> float:
    """Independent coding of h for cross-checks (inaccurate near 0)."""
    return (math.exp(x) - 1.0 - x) / (x * x)


def lambda_a(a: float, d_delta: float, c0: int) -> float:
    """Soundness rate: a * h(a * sqrt(d_delta) * c0^(-1/3))."""
    return a * h(a * math.sqrt(d_delta) * c0 ** (-1.0 / 3.0))


def lambda_b(b: float, d_delta: float, c0: int) -> float:
    """Completeness rate 2/pi minus the two finite-c0 correction terms.

    May be negative for unlucky (b, d_delta); callers must check.
    """
    return (2.0 / math.pi
            - (4.0 / (d_delta * math.pi)) * c0 ** (-1.0 / 3.0)
            - b * h(b * math.sqrt(d_delta)) * c0 ** (-2.0 / 3.0))


def _rhs_soundness(kind: str, L: float) -> float:
    if kind == "S":
        return 1.0
    if kind == "S'":
        return 1.0 + _LN2 / L
    raise ValueError(f"unknown soundness condition {kind!r}")


def _rhs_completeness(kind: str, b: float, d_delta: float, c0: int,
                      et: float, L: float, B: int) -> float:
    cr = c0 ** (-1.0 / 3.0)
    if kind == "C":
        return et * cr
    if kind == "C'":
        B = 1
    elif kind != "C''":
        raise ValueError(f"unknown completeness condition {kind!r}")
    return (et + (_LN2 + B * b * math.sqrt(d_delta)) / L) * cr


def margins(inst: ProblemInstance, tc: TuningConstants,
            variant: str | None = None) -> tuple[float, float]:
    """(soundness, completeness) condition slack at tc's own witnesses.

    Each margin is LHS - RHS of the variant's condition; both >= 0 iff tc is
    a feasibility certificate for this instance and variant.
    """
    variant = variant or inst.variant
    skind, ckind = _CONDITIONS[variant]
    L = inst.log_ratio
    la = lambda_a(tc.a, tc.d_delta, inst.c0)
    lb = lambda_b(tc.b, tc.d_delta, inst.c0)
    rs = _rhs_soundness(skind, L)
    rc = _rhs_completeness(ckind, tc.b, tc.d_delta, inst.c0, inst.eta, L,
                           inst.B)
    return (tc.a * (tc.d_z - la * tc.d_ell) - rs,
            tc.b * (lb * tc.d_ell - tc.d_z) - rc)


def best_witness_margins(inst: ProblemInstance, d_ell: float, d_z: float,
                         d_delta: float, variant: str | None = None,
                         ) -> tuple[float, float, float, float]:
    """Maximize each condition margin over its witness for fixed constants.

    Returns (soundness_margin, completeness_margin, a, b).  Soundness depends
    only on a and completeness only on b, so the two searches are separate
    1-D golden-section maximizations in log space.
    """
    variant = variant or inst.variant
    skind, ckind = _CONDITIONS[variant]
    L = inst.log_ratio
    rs = _rhs_soundness(skind, L)

    def neg_sound(la_log):
        a = math.exp(la_log)
        return -(a * (d_z - lambda_a(a, d_delta, inst.c0) * d_ell) - rs)

    def neg_comp(lb_log):
        b = math.exp(lb_log)
        rc = _rhs_completeness(ckind, b, d_delta, inst.c0, inst.eta, L,
                               inst.B)
        return -(b * (lambda_b(b, d_delta, inst.c0) * d_ell - d_z) - rc)

    la_log = _golden_scan(neg_sound, -14.0, 4.0)
    lb_log = _golden_scan(neg_comp, -14.0, 4.0)
    a, b = math.exp(la_log), math.exp(lb_log)
    return -neg_sound(la_log), -neg_comp(lb_log), a, b


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section minimum of f on [lo, hi]."""
    x1 = hi - _PHI * (hi - lo)
    x2 = lo + _PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _PHI * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def _golden_scan(f, lo: float, hi: float, pieces: int = 24) -> float:
    """Golden-section refinement seeded by a coarse scan (for 1-D witness
    searches whose maximizer may sit anywhere in a wide interval)."""
    xs = [lo + (hi - lo) * k / pieces for k in range(pieces + 1)]
    fs = [f(x) for x in xs]
    k = min(range(len(xs)), key=lambda i: fs[i])
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, pieces)]
    return _golden_min(f, a, b)


@dataclass
class _Objective:
    """Reduced scalar objective d_ell(a, b, d_delta) for one variant."""

    skind: str
    ckind: str
    c0: int
    eta: float
    L: float
    B: int

    def d_ell(self, a: float, b: float, d_delta: float) -> float:
        if a <= 0.0 or b <= 0.0 or d_delta <= 0.0:
            return math.inf
        # cutoff must leave delta < 1/2
        if d_delta * self.c0 ** (4.0 / 3.0) <= 2.0:
            return math.inf
        la = lambda_a(a, d_delta, self.c0)
        lb = lambda_b(b, d_delta, self.c0)
        if lb <= 0.0 or lb <= la:
            return math.inf
        rs = _rhs_soundness(self.skind, self.L)
        rc = _rhs_completeness(self.ckind, b, d_delta, self.c0, self.eta,
                               self.L, self.B)
        return (rs / a + rc / b) / (lb - la)

    def full(self, a: float, b: float, d_delta: float):
        """(d_ell, d_z, lambda_a, lambda_b) at the tight inner solution."""
        de = self.d_ell(a, b, d_delta)
        la = lambda_a(a, d_delta, self.c0)
        lb = lambda_b(b, d_delta, self.c0)
        rs = _rhs_soundness(self.skind, self.L)
        dz = rs / a + la * de
        return de, dz, la, lb


_STARTS = [(a0, b0, dd0)
           for a0 in (0.2, 0.6)
           for b0 in (0.05, 0.5, 2.0)
           for dd0 in (6.0, 15.0, 40.0)]


def optimize_constants(inst: ProblemInstance, variant: str | None = None,
                       rel_tol: float = 1e-12,
                       max_sweeps: int = 300) -> TuningConstants:
    """Codelength-minimizing constants for the instance's scheme variant.

    Multi-start coordinate descent on log(a, b, d_delta) with golden-section
    line searches; a sweep stops improving once the relative decrease of
    d_ell falls below ``rel_tol``.  The returned constants carry the best
    witnesses and strictly nonnegative margins (a relative slack of ~1e-8 is
    folded into d_ell and d_z so the certificate survives re-verification in
    floating point).

    Raises :class:`InfeasibleError` when no feasible point exists, which can
    happen for tiny c0 combined with extreme B or error budgets.
    """
    variant = variant or inst.variant
    skind, ckind = _CONDITIONS[variant]
    obj = _Objective(skind, ckind, inst.c0, inst.eta, inst.log_ratio, inst.B)

    def flog(x):
        return obj.d_ell(math.exp(x[0]), math.exp(x[1]), math.exp(x[2]))

    best_val, best_x = math.inf, None
    for start in _STARTS:
        x = [math.log(v) for v in start]
        fx = flog(x)
        width = math.log(4.0)
        for sweep in range(max_sweeps):
            for i in range(3):
                def line(t, i=i, x=x):
                    y = list(x)
                    y[i] = t
                    return flog(y)
                x[i] = _golden_min(line, x[i] - width, x[i] + width)
            fx_new = flog(x)
            rel = math.inf
            if math.isfinite(fx_new) and math.isfinite(fx) and fx > 0:
                rel = (fx - fx_new) / fx
            fx = fx_new
            width = max(width * 0.7, 0.02)
            if rel < rel_tol and sweep > 4:
                break
        if fx < best_val:
            best_val, best_x = fx, list(x)

    if best_x is None or not math.isfinite(best_val):
        raise InfeasibleError(
            f"no feasible (a, b, d_delta) for variant {variant!r} at "
            f"c0={inst.c0}, B={inst.B}: lambda_b never exceeds lambda_a")

    a, b, d_delta = (math.exp(v) for v in best_x)
    d_ell, d_z, la, lb = obj.full(a, b, d_delta)
    # fold in slack so both margins are strictly positive after rounding
    d_ell *= 1.0 + 2e-8
    d_z = _rhs_soundness(skind, inst.log_ratio) / a + la * d_ell
    d_z += 1e-9 * d_z
    sm, cm = margins(
        inst,
        TuningConstants(d_ell=d_ell, d_z=d_z, d_delta=d_delta, a=a, b=b,
                        lambda_a=la, lambda_b=lb, soundness_margin=0.0,
                        completeness_margin=0.0),
        variant)
    if sm < 0.0 or cm < 0.0:
        raise InfeasibleError(
            f"optimizer produced an invalid certificate (margins {sm:g}, "
            f"{cm:g}); variant {variant!r} appears infeasible")
    return TuningConstants(d_ell=d_ell, d_z=d_z, d_delta=d_delta, a=a, b=b,
                           lambda_a=la, lambda_b=lb, soundness_margin=sm,
                           completeness_margin=cm)


def optimize_scheme(inst: ProblemInstance,
                    variant: str | None = None) -> SchemeParameters:
    """Optimize constants and scale them into concrete scheme parameters."""
    return derive_scheme_params(inst, optimize_constants(inst, variant))


def weakly_dynamic_A_total_bound(ell_dynamic: int, B: int, c0: int) -> int:
    """Worst-case broadcast length of the disregard-window scheme.

    Scored positions are capped by the dynamic codelength and each of the at
    most c0 disconnection events contaminates at most B following positions.
    """
    return ell_dynamic + B * c0


def allocate_eps(eps1: float, c_grid, weights=None) -> dict[int, float]:
    """Per-size soundness budgets for a universal ladder.

    Default allocation eps1_c = 6 eps1 / (pi^2 c^2): the sum over all c >= 2
    is below eps1 (Basel sum minus the c=1 term), so any sub-grid keeps the
    total budget valid.  Custom ``weights`` (mapping c -> eps1_c) are
    validated against the same budget.
    """
    c_grid = list(c_grid)
    if not c_grid:
        raise ValueError("c_grid must be nonempty")
    if weights is None:
        return {c: 6.0 * eps1 / (math.pi ** 2 * c * c) for c in c_grid}
    alloc = {c: float(weights[c]) for c in c_grid}
    if any(v <= 0.0 for v in alloc.values()):
        raise ValueError("allocations must be positive")
    if sum(alloc.values()) > eps1 * (1 + 1e-12):
        raise ValueError(
            f"allocation sums to {sum(alloc.values()):g} > eps1 = {eps1:g}")
    return alloc


def make_c_grid(c_max: int, kind: str = "auto", ratio: int = 2,
                ) -> tuple[int, ...]:
    """Coalition-size grid: full {2..c_max}, or geometric {2, 2r, 2r^2, ...}.

    ``auto`` uses the full grid up to c_max = 64 and geometric beyond (the
    per-user score storage grows linearly in the grid size).
    """
    if c_max < 2:
        raise ValueError("c_max must be >= 2")
    if kind == "auto":
        kind = "full" if c_max <= 64 else "geometric"
    if kind == "full":
        return tuple(range(2, c_max + 1))
    if kind == "geometric":
        if ratio < 2:
            raise ValueError("geometric ratio must be >= 2")
        grid = []
        c = 2
        while c < c_max:
            grid.append(c)
            c *= ratio
        grid.append(c_max)
        return tuple(grid)
    raise ValueError(f"unknown grid kind {kind!r}")


def build_universal_ladder(n: int, eps1: float, eps2: float, c_grid=None,
                           c_max: int | None = None, grid: str = "auto",
                           ratio: int = 2, weights=None) -> UniversalLadder:
    """Optimize a per-coalition-size ladder of dynamic schemes.

    Each entry c gets budget eps1_c (see :func:`allocate_eps`), log ratio
    ln(n/eps1_c) and eta_c = ln(1/eps2)/ln(n/eps1_c), and its constants are
    optimized under the dynamic conditions at those values.
    """
    if c_grid is None:
        if c_max is None:
            raise ValueError("pass either c_grid or c_max")
        c_grid = make_c_grid(c_max, grid, ratio)
    c_grid = tuple(sorted(set(int(c) for c in c_grid)))
    if c_grid[0] < 2 or c_grid[-1] > n:
        raise ValueError("c_grid must lie within {2..n}")
    alloc = allocate_eps(eps1, c_grid, weights)
    entries = []
    for c in c_grid:
        e1c = alloc[c]
        inst_c = ProblemInstance(n=n, eps1=e1c, eps2=eps2, c0=c,
                                 variant="dynamic")
        tc = optimize_constants(inst_c, "dynamic")
        params = derive_scheme_params(inst_c, tc)
        entries.append(LadderEntry(c=c, eps1_c=e1c, eta_c=inst_c.eta,
                                   ell=params.ell, Z=params.Z,
                                   delta=params.delta, constants=tc))
    return UniversalLadder(n=n, eps1=eps1, eps2=eps2, c_grid=c_grid,
                           entries=tuple(entries))


def sweep_d_ell(variant: str, c0_values, n: int, eps1: float, eps2: float,
                B: int = 0) -> list[dict]:
    """d_ell (and friends) as a function of c0, for curve plots.

    Returns one row per c0 with keys c0, d_ell, d_z, d_delta, ell, Z, delta.
    """
    rows = []
    for c0 in c0_values:
        inst = ProblemInstance(n=n, eps1=eps1, eps2=eps2, c0=int(c0), B=B,
                               variant=variant)
        tc = optimize_constants(inst)
        params = derive_scheme_params(inst, tc)
        rows.append({"c0": int(c0), "d_ell": tc.d_ell, "d_z": tc.d_z,
                     "d_delta": tc.d_delta, "ell": params.ell,
                     "Z": params.Z, "delta": params.delta})
    return rows
