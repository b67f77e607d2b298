"""Arcsine bias distribution: CDF values, inverse sampling, disregard
fraction."""
import math

import numpy as np
import pytest
from scipy import stats as sps

from tardos.backend import K
from tardos.distributions import (BiasDistribution, disregard_fraction,
                                  sample_bias)
from tardos.rng import derive_stream

# frozen oracle: quadrature of f_delta over [0.01, 0.25] (scipy.integrate.quad,
# abserr ~3e-15)
CDF_001_025 = 0.30896990483460696


def test_cdf_midpoint_no_cutoff():
    assert BiasDistribution(0.0).cdf(0.5) == pytest.approx(0.5, abs=1e-15)


def test_cdf_boundaries():
    d = BiasDistribution(0.0)
    assert d.cdf(0.0) == 0.0
    assert d.cdf(1.0) == pytest.approx(1.0, abs=1e-15)
    dc = BiasDistribution(0.03)
    assert dc.cdf(0.03) == 0.0
    assert dc.cdf(0.97) == pytest.approx(1.0, abs=1e-15)


def test_cdf_quadrature_oracle():
    assert BiasDistribution(0.01).cdf(0.25) == pytest.approx(CDF_001_025,
                                                             abs=1e-13)


def test_cdf_domain_error():
    with pytest.raises(ValueError):
        BiasDistribution(0.05).cdf(0.01)
    with pytest.raises(ValueError):
        BiasDistribution(0.05).cdf(0.999)


def test_sample_midpoint_symmetry_point():
    assert sample_bias(0.0, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_sample_boundary_limits():
    for delta in (0.0, 1e-4, 0.05):
        d = BiasDistribution(delta)
        assert d.sample(1e-12) == pytest.approx(delta, abs=1e-9)
        assert d.sample(1 - 1e-12) == pytest.approx(1 - delta, abs=1e-9)


@pytest.mark.parametrize("delta", [0.0, 1e-4, 1e-2, 0.1])
def test_inverse_roundtrip(delta):
    d = BiasDistribution(delta)
    u = np.linspace(1e-3, 1 - 1e-3, 2500)
    assert np.max(np.abs(d.cdf(d.sample(u)) - u)) <= 1e-12


@pytest.mark.parametrize("delta", [0.0, 1e-4, 1e-2, 0.1])
def test_sample_monotone_and_symmetric(delta):
    d = BiasDistribution(delta)
    u = np.linspace(1e-6, 1 - 1e-6, 4001)
    p = d.sample(u)
    assert np.all(np.diff(p) > 0)
    assert np.max(np.abs(d.sample(1.0 - u) - (1.0 - p))) <= 1e-12


def test_nesting_of_cutoff_windows():
    # a draw inside [d, 1-d] stays inside [d', 1-d'] for every d' <= d
    u = np.linspace(1e-6, 1 - 1e-6, 1001)
    p = BiasDistribution(0.01).sample(u)
    for smaller in (0.003, 1e-4, 0.0):
        assert np.all((p >= smaller) & (p <= 1 - smaller))


def test_ks_against_closed_form():
    u = K.uniforms(derive_stream(20260810, 0xD1), 0, 100_000)
    p = BiasDistribution(0.0).sample(u)
    res = sps.kstest(p, lambda x: (2 / math.pi) * np.arcsin(np.sqrt(x)))
    assert res.pvalue > 0.01


def test_disregard_trivials():
    assert disregard_fraction(0.0) == 0.0
    assert disregard_fraction(0.5) == pytest.approx(1.0, abs=1e-15)
    assert disregard_fraction(9.89e-4) == pytest.approx(0.0401, abs=2e-4)


def test_disregard_matches_monte_carlo():
    delta_c = 9.89e-4
    u = K.uniforms(derive_stream(31, 0xD2), 0, 1_000_000)
    p = BiasDistribution(0.0).sample(u)
    frac = np.mean((p < delta_c) | (p > 1 - delta_c))
    q = disregard_fraction(delta_c)
    sigma = math.sqrt(q * (1 - q) / len(p))
    assert abs(frac - q) < 4 * sigma


def test_domain_validation():
    with pytest.raises(ValueError):
        BiasDistribution(0.5)
    with pytest.raises(ValueError):
        BiasDistribution(-0.1)
    with pytest.raises(ValueError):
        disregard_fraction(0.6)
    with pytest.raises(ValueError):
        BiasDistribution(0.0).sample(0.0)
