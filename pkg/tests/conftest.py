"""Shared fixtures: the running example instances and their optimized
constants (session-scoped; the optimizer is deterministic, so caching is
safe)."""
import pytest

from tardos.model import ProblemInstance, derive_scheme_params
from tardos.optimize import optimize_constants

PAPER = dict(n=10 ** 6, eps1=1e-3, eps2=1e-3)
DESK = dict(n=10 ** 4, eps1=1e-3, eps2=1e-3)


def _scheme(variant, c0, B=0, **kw):
    inst = ProblemInstance(c0=c0, B=B, variant=variant, **kw)
    tc = optimize_constants(inst)
    return inst, tc, derive_scheme_params(inst, tc)


@pytest.fixture(scope="session")
def static25():
    return _scheme("static", 25, **PAPER)


@pytest.fixture(scope="session")
def dynamic25():
    return _scheme("dynamic", 25, **PAPER)


@pytest.fixture(scope="session")
def weakly_b25():
    return _scheme("weakly-dynamic-B", 25, B=8, **PAPER)


@pytest.fixture(scope="session")
def desk_dynamic5():
    return _scheme("dynamic", 5, **DESK)
