"""Domain types: parameter formulas, invariants, JSON round-trips."""
import math

import pytest

from tardos.model import (ProblemInstance, TuningConstants,
                          derive_scheme_params, dumps, eta, loads)

PAPER = dict(n=10 ** 6, eps1=1e-3, eps2=1e-3)


def _tc(d_ell, d_z, d_delta):
    return TuningConstants(d_ell=d_ell, d_z=d_z, d_delta=d_delta, a=0.4,
                           b=0.3, lambda_a=0.3, lambda_b=0.6,
                           soundness_margin=0.0, completeness_margin=0.0)


def test_eta_running_example():
    assert eta(**PAPER) == pytest.approx(1 / 3, rel=1e-12)


def test_eta_monotone_in_n():
    vals = [eta(n, 1e-3, 1e-3) for n in (10 ** 3, 10 ** 4, 10 ** 6, 10 ** 9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v > 0 for v in vals)


def test_derive_params_static_example():
    # constants as printed for the c0=25 running example; ell/Z match the
    # published values (the published delta is inconsistent with the cutoff
    # formula and is not asserted)
    inst = ProblemInstance(c0=25, **PAPER)
    params = derive_scheme_params(inst, _tc(8.46, 4.53, 14.36))
    assert params.ell == pytest.approx(109585, abs=12)
    assert params.Z == pytest.approx(2345, abs=3)
    assert 0 < params.delta < 0.5


def test_derive_params_dynamic_example():
    inst = ProblemInstance(c0=25, variant="dynamic", **PAPER)
    params = derive_scheme_params(inst, _tc(9.00, 4.73, 13.44))
    assert params.ell == pytest.approx(116561, abs=12)
    assert params.delta == pytest.approx(1.02e-3, rel=5e-3)


def test_derive_params_rejects_giant_cutoff():
    inst = ProblemInstance(c0=2, **PAPER)
    with pytest.raises(ValueError):
        derive_scheme_params(inst, _tc(8.0, 4.0, 0.15))  # delta >= 1/2


def test_derive_params_rejects_nonpositive():
    inst = ProblemInstance(c0=25, **PAPER)
    with pytest.raises(ValueError):
        derive_scheme_params(inst, _tc(8.0, 4.0, -1.0))


def test_d_ell_roundtrip():
    inst = ProblemInstance(c0=25, **PAPER)
    d_ell = 8.4608
    raw = d_ell * inst.c0 ** 2 * inst.log_ratio
    assert raw / (inst.c0 ** 2 * inst.log_ratio) == pytest.approx(
        d_ell, abs=1e-9)


def test_instance_validation():
    with pytest.raises(ValueError):
        ProblemInstance(n=1, eps1=1e-3, eps2=1e-3, c0=2)
    with pytest.raises(ValueError):
        ProblemInstance(n=100, eps1=0.0, eps2=1e-3, c0=2)
    with pytest.raises(ValueError):
        ProblemInstance(n=100, eps1=1e-3, eps2=1e-3, c0=101)
    with pytest.raises(ValueError):
        ProblemInstance(n=100, eps1=1e-3, eps2=1e-3, c0=5, B=3)  # static B
    with pytest.raises(ValueError):
        ProblemInstance(n=100, eps1=1e-3, eps2=1e-3, c0=5,
                        variant="weakly-dynamic-B")  # missing B


def test_tuning_constants_validation():
    with pytest.raises(ValueError):
        TuningConstants(d_ell=8, d_z=4, d_delta=14, a=0.4, b=0.3,
                        lambda_a=0.3, lambda_b=0.6, soundness_margin=-0.1,
                        completeness_margin=0.0)
    with pytest.raises(ValueError):
        TuningConstants(d_ell=8, d_z=4, d_delta=14, a=0.4, b=0.3,
                        lambda_a=0.7, lambda_b=0.6, soundness_margin=0.0,
                        completeness_margin=0.0)


def test_json_roundtrip():
    inst = ProblemInstance(c0=25, variant="dynamic", **PAPER)
    params = derive_scheme_params(inst, _tc(9.0, 4.73, 13.44))
    for obj in (inst, params.constants, params):
        assert loads(dumps(obj)) == obj


def test_max_position_score():
    inst = ProblemInstance(c0=25, **PAPER)
    params = derive_scheme_params(inst, _tc(8.46, 4.53, 14.36))
    assert params.max_position_score == pytest.approx(
        math.sqrt((1 - params.delta) / params.delta), rel=1e-15)
