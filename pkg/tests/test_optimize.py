"""Optimizer: h and the rate functions, condition margins, golden constants,
budget allocation and ladders."""
import math

import pytest

from tardos.model import InfeasibleError, ProblemInstance
from tardos.optimize import (_h_naive, allocate_eps, best_witness_margins,
                             build_universal_ladder, h, lambda_a, lambda_b,
                             make_c_grid, margins, optimize_constants)

PAPER = dict(n=10 ** 6, eps1=1e-3, eps2=1e-3)

# frozen oracles (independent codings, see test bodies)
LAMBDA_A_ORACLE = 0.42734877417013456  # a=2/pi, d_delta=14.36, c0=25
LAMBDA_B_ORACLE = 0.5447000905906259   # b=0.5,  d_delta=13.44, c0=25


def test_h_limit_and_point_values():
    assert h(1e-15) == pytest.approx(0.5, rel=1e-9)
    assert h(1.0) == pytest.approx(math.e - 2.0, rel=1e-12)


def test_h_series_vs_naive_guard():
    # the series must agree with the naive coding where the latter is stable,
    # and stay exact at 1e-8 where the naive coding loses digits
    assert h(1e-8) == pytest.approx(0.5, rel=1e-6)
    for x in (0.05, 0.1, 0.2, 1.0, 3.0):
        assert h(x) == pytest.approx(_h_naive(x), rel=1e-9)


def test_h_increasing():
    xs = [1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0]
    vals = [h(x) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[0] > 0.5 - 1e-9


def test_lambda_a_substitution():
    assert lambda_a(1.0, 1.0, 1) == pytest.approx(math.e - 2.0, rel=1e-12)


def test_lambda_a_asymptote():
    # a = 2/pi, c0 -> infinity: h -> 1/2, so lambda_a -> 1/pi
    assert lambda_a(2 / math.pi, 11.0, 10 ** 12) == pytest.approx(
        1 / math.pi, rel=1e-3)


def test_lambda_a_oracle():
    assert lambda_a(2 / math.pi, 14.36, 25) == pytest.approx(
        LAMBDA_A_ORACLE, rel=1e-12)


def test_lambda_b_asymptote():
    assert lambda_b(1e-9, 1e9, 25) == pytest.approx(2 / math.pi, rel=1e-6)
    assert lambda_b(0.3, 12.0, 10 ** 12) == pytest.approx(2 / math.pi,
                                                          rel=1e-3)


def test_lambda_b_oracle():
    assert lambda_b(0.5, 13.44, 25) == pytest.approx(LAMBDA_B_ORACLE,
                                                     rel=1e-12)


def test_margins_tight_inner_solution():
    # for fixed (a, b, d_delta) the closed-form (d_ell, d_z) makes both
    # conditions exactly tight
    inst = ProblemInstance(c0=25, variant="dynamic", **PAPER)
    a, b, dd = 0.4, 0.3, 13.0
    la = lambda_a(a, dd, inst.c0)
    lb = lambda_b(b, dd, inst.c0)
    L = inst.log_ratio
    rs = 1.0 + math.log(2) / L
    rc = (inst.eta + (math.log(2) + b * math.sqrt(dd)) / L) * 25 ** (-1 / 3)
    d_ell = (rs / a + rc / b) / (lb - la)
    d_z = rs / a + la * d_ell
    from tardos.model import TuningConstants
    tc = TuningConstants(d_ell=d_ell, d_z=d_z, d_delta=dd, a=a, b=b,
                         lambda_a=la, lambda_b=lb, soundness_margin=0.0,
                         completeness_margin=0.0)
    sm, cm = margins(inst, tc)
    assert abs(sm) < 1e-12
    assert abs(cm) < 1e-12


def test_margins_pull_d_z_in_opposite_directions():
    inst = ProblemInstance(c0=25, **PAPER)
    from tardos.model import TuningConstants
    tc = TuningConstants(d_ell=0.5, d_z=100.0, d_delta=14.0, a=0.4, b=0.3,
                         lambda_a=lambda_a(0.4, 14.0, 25),
                         lambda_b=lambda_b(0.3, 14.0, 25),
                         soundness_margin=0.0, completeness_margin=0.0)
    sm, cm = margins(inst, tc)
    assert sm > 0
    assert cm < 0


def test_paper_constants_are_nearly_feasible_dynamic():
    # the printed 3.5-section constants with re-optimized witnesses sit on
    # the boundary; the 2-decimal rounding of d_z alone shifts the
    # completeness margin by ~1.5e-3, so the slack band is 2e-3
    inst = ProblemInstance(c0=25, variant="dynamic", **PAPER)
    sm, cm, a, b = best_witness_margins(inst, 9.00, 4.73, 13.44)
    assert sm >= -2e-3
    assert cm >= -2e-3
    assert a > 0 and b > 0


def test_asymptotic_constants_nearly_feasible_static():
    # Lemma-3 first-order constants at huge c0: margins within 1e-2
    gamma = (2 / (3 * math.pi)) ** (2 / 3)
    inst = ProblemInstance(c0=10 ** 6, **PAPER)
    sm, cm, _, _ = best_witness_margins(inst, math.pi ** 2 / 2, math.pi,
                                        4 / gamma)
    assert sm >= -1e-2
    assert cm >= -1e-2


def test_optimize_static_golden(static25):
    _, tc, params = static25
    assert tc.d_ell == pytest.approx(8.46, rel=0.01)
    assert tc.d_z == pytest.approx(4.53, rel=0.01)
    assert tc.d_delta == pytest.approx(14.36, rel=0.01)
    assert 109000 <= params.ell <= 110200
    assert 2330 <= params.Z <= 2360


def test_optimize_dynamic_golden(dynamic25):
    _, tc, params = dynamic25
    assert tc.d_ell == pytest.approx(9.00, rel=0.01)
    assert tc.d_z == pytest.approx(4.73, rel=0.01)
    assert tc.d_delta == pytest.approx(13.44, rel=0.01)
    assert 115900 <= params.ell <= 117200
    assert 2435 <= params.Z <= 2465


def test_optimize_weakly_b_golden(weakly_b25):
    _, tc, params = weakly_b25
    assert tc.d_ell == pytest.approx(10.16, rel=0.01)
    assert tc.d_z == pytest.approx(4.94, rel=0.01)
    assert tc.d_delta == pytest.approx(10.07, rel=0.01)
    assert 130900 <= params.ell <= 132300


def test_optimize_universal_entry_golden():
    eps1_25 = 6e-3 / (math.pi ** 2 * 625)
    assert eps1_25 == pytest.approx(9.727e-7, rel=1e-3)
    inst = ProblemInstance(n=10 ** 6, eps1=eps1_25, eps2=1e-3, c0=25,
                           variant="dynamic")
    tc = optimize_constants(inst)
    assert tc.d_ell == pytest.approx(8.59, rel=0.01)
    assert tc.d_z == pytest.approx(4.61, rel=0.01)
    assert tc.d_delta == pytest.approx(13.83, rel=0.01)


def test_certificate_reverifies(dynamic25):
    inst, tc, _ = dynamic25
    sm, cm = margins(inst, tc)
    assert sm >= 0.0
    assert cm >= 0.0


def test_weakly_b1_equals_dynamic(dynamic25):
    inst_b = ProblemInstance(c0=25, B=1, variant="weakly-dynamic-B", **PAPER)
    tc_b = optimize_constants(inst_b)
    _, tc_d, _ = dynamic25
    assert tc_b.d_ell == tc_d.d_ell
    assert tc_b.d_z == tc_d.d_z
    assert tc_b.d_delta == tc_d.d_delta


def test_static_d_ell_approaches_asymptote():
    vals = []
    for c0 in (100, 1000, 10000):
        inst = ProblemInstance(c0=c0, **PAPER)
        vals.append(optimize_constants(inst).d_ell)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v >= math.pi ** 2 / 2 for v in vals)


def test_b_monotonicity():
    prev = 0.0
    for B in (1, 2, 4, 8):
        inst = ProblemInstance(c0=25, B=B, variant="weakly-dynamic-B",
                               **PAPER)
        d = optimize_constants(inst).d_ell
        assert d >= prev
        prev = d


def test_infeasible_raises():
    # a delay so extreme that no witnesses work at minimal coalition size
    inst = ProblemInstance(n=4, eps1=0.9, eps2=1e-12, c0=2, B=10 ** 9,
                           variant="weakly-dynamic-B")
    with pytest.raises(InfeasibleError):
        optimize_constants(inst)


def test_allocate_eps_default():
    alloc = allocate_eps(1e-3, [25])
    assert alloc[25] == pytest.approx(9.727e-7, rel=1e-3)
    # Basel sum minus the c=1 term stays below the budget
    total = sum(6e-3 / (math.pi ** 2 * c * c) for c in range(2, 200_000))
    assert total < 1e-3


def test_allocate_eps_custom_rejects_overdraft():
    with pytest.raises(ValueError):
        allocate_eps(1e-3, [2, 3], weights={2: 1e-3, 3: 0.5e-3})
    ok = allocate_eps(1e-3, [2, 3], weights={2: 4e-4, 3: 4e-4})
    assert ok == {2: 4e-4, 3: 4e-4}


def test_make_c_grid():
    assert make_c_grid(64, "geometric", 2) == (2, 4, 8, 16, 32, 64)
    assert make_c_grid(6, "full") == (2, 3, 4, 5, 6)
    assert make_c_grid(200, "auto")[0] == 2  # geometric beyond 64
    assert len(make_c_grid(200, "auto")) < 10


def test_ladder_ell_monotone_and_budget():
    ladder = build_universal_ladder(10 ** 4, 1e-3, 1e-3, c_grid=range(2, 11))
    ells = [e.ell for e in ladder.entries]
    assert all(a < b for a, b in zip(ells, ells[1:]))
    assert sum(e.eps1_c for e in ladder.entries) <= 1e-3
    for e in ladder.entries:
        assert e.eta_c == pytest.approx(
            math.log(1e3) / math.log(10 ** 4 / e.eps1_c), rel=1e-12)
