"""The arcsine bias distribution and its cutoff variant.

Per-position biases p are drawn from the arcsine distribution restricted to
[delta, 1-delta] and rescaled:

    F_delta(p) = (2 asin(sqrt(p)) - 2 asin(sqrt(delta))) / (pi - 4 asin(sqrt(delta)))
    f_delta(p) = 1 / ((pi - 4 asin(sqrt(delta))) * sqrt(p (1 - p)))

delta = 0 gives the plain arcsine distribution F(p) = (2/pi) asin(sqrt(p)).
Sampling uses the exact closed-form inverse CDF (deterministic under the
counter-based streams, no rejection loop).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def disregard_fraction(delta_c: float) -> float:
    """Probability that a plain-arcsine draw falls outside [delta_c, 1-delta_c].

    This is the fraction of positions a ladder entry with cutoff ``delta_c``
    disregards: (4/pi) * asin(sqrt(delta_c)).
    """
    if not 0.0 <= delta_c <= 0.5:
        raise ValueError(f"cutoff must be in [0, 1/2], got {delta_c}")
    return (4.0 / math.pi) * math.asin(math.sqrt(delta_c))


@dataclass(frozen=True)
class BiasDistribution:
    """Arcsine distribution with cutoff ``delta`` in [0, 1/2)."""

    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta < 0.5:
            raise ValueError(f"cutoff must be in [0, 1/2), got {self.delta}")

    @property
    def _asin_sqrt_delta(self) -> float:
        return math.asin(math.sqrt(self.delta))

    def cdf(self, p):
        """F_delta(p) for p in [delta, 1-delta] (scalar or array)."""
        a = self._asin_sqrt_delta
        if np.any(p < self.delta) or np.any(p > 1.0 - self.delta):
            raise ValueError("p outside [delta, 1-delta]")
        return (2.0 * np.arcsin(np.sqrt(p)) - 2.0 * a) / (math.pi - 4.0 * a)

    def pdf(self, p):
        """f_delta(p) for p in [delta, 1-delta] (scalar or array)."""
        a = self._asin_sqrt_delta
        if np.any(p < self.delta) or np.any(p > 1.0 - self.delta):
            raise ValueError("p outside [delta, 1-delta]")
        return 1.0 / ((math.pi - 4.0 * a) * np.sqrt(p * (1.0 - p)))

    def sample(self, u):
        """Inverse-CDF sample: u in (0,1) -> p in (delta, 1-delta).

        p = sin^2(asin(sqrt(delta)) + u * (pi/2 - 2 asin(sqrt(delta)))),
        so cdf(sample(u)) == u to floating-point accuracy.  Accepts scalars
        or arrays.
        """
        a = self._asin_sqrt_delta
        scalar = np.isscalar(u)
        uu = np.asarray(u, dtype=np.float64)
        if np.any(uu <= 0.0) or np.any(uu >= 1.0):
            raise ValueError("u must lie strictly inside (0, 1)")
        s = np.sin(a + uu * (math.pi / 2.0 - 2.0 * a))
        p = s * s
        return float(p) if scalar else p

    def in_window(self, p):
        """Whether p lies inside [delta, 1-delta] (scalar or array)."""
        return (p >= self.delta) & (p <= 1.0 - self.delta)


def sample_bias(delta: float, u):
    """Convenience wrapper: one inverse-CDF draw from F_delta."""
    return BiasDistribution(delta).sample(u)
