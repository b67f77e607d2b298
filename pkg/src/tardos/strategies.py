"""Pirate-coalition forgery models obeying the marking assumption.

A coalition sees only its own members' bits.  On positions where all active
members hold the same symbol, the forgery carries that symbol — this is
enforced unconditionally after the strategy runs, so no strategy can violate
the marking assumption.  On detectable positions the named strategies differ:

* ``interleaving`` — output the bit of a uniformly random active member;
* ``scapegoat``    — one designated member's bit is always output; when the
  scapegoat is disconnected another active member is designated at random;
* ``majority`` / ``minority`` — the most / least common bit (ties: coin flip);
* ``coin-flip``    — a uniform random bit.

Strategy randomness is addressed by position (one uniform per position from
the coalition's stream), so transcripts are reproducible and independent of
evaluation order.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

from .rng import TAG_SCAPEGOAT, TAG_STRATEGY, derive_stream, uniform_at

STRATEGIES = ("interleaving", "scapegoat", "majority", "minority",
              "coin-flip")


class EmptyCoalitionError(RuntimeError):
    """forge() called with no active members (the run must terminate)."""


class Coalition:
    """Mutable per-run pirate state: members, active subset, strategy."""

    def __init__(self, members: Sequence[int], strategy: str, seed: int):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}; "
                             f"pick one of {STRATEGIES}")
        self.members = tuple(sorted(int(m) for m in members))
        if len(set(self.members)) != len(self.members):
            raise ValueError("duplicate coalition members")
        self.active = list(self.members)
        self.strategy = strategy
        self._u_base = derive_stream(seed, TAG_STRATEGY)
        self._redesignate_base = derive_stream(seed, TAG_SCAPEGOAT)
        self.scapegoat: Optional[int] = None
        if strategy == "scapegoat" and self.active:
            k = int(uniform_at(self._redesignate_base, 0) * len(self.active))
            self.scapegoat = self.active[min(k, len(self.active) - 1)]

    @property
    def is_active(self) -> bool:
        return bool(self.active)

    def forge(self, i: int, bits: Sequence[int]) -> int:
        """Forged bit for position i given the active members' bits.

        ``bits`` is aligned with ``self.active`` (ascending member order).
        """
        k = len(self.active)
        if k == 0:
            raise EmptyCoalitionError("all pirates are disconnected")
        if len(bits) != k:
            raise ValueError(f"expected {k} bits, got {len(bits)}")
        ones = 0
        for x in bits:
            ones += x
        # marking assumption: unanimous columns are copied verbatim
        if ones == 0:
            return 0
        if ones == k:
            return 1
        if self.strategy == "scapegoat":
            return int(bits[self.active.index(self.scapegoat)])
        u = uniform_at(self._u_base, i)
        if self.strategy == "interleaving":
            return int(bits[min(int(u * k), k - 1)])
        if self.strategy == "majority":
            if 2 * ones != k:
                return 1 if 2 * ones > k else 0
            return 1 if u < 0.5 else 0
        if self.strategy == "minority":
            if 2 * ones != k:
                return 0 if 2 * ones > k else 1
            return 1 if u < 0.5 else 0
        # coin-flip
        return 1 if u < 0.5 else 0

    def on_disconnect(self, user: int, position: int) -> None:
        """Remove a member; redesignate the scapegoat if he was caught."""
        if user not in self.active:
            raise ValueError(f"user {user} is not an active member")
        self.active.remove(user)
        if self.strategy == "scapegoat" and user == self.scapegoat:
            if self.active:
                u = uniform_at(self._redesignate_base, position)
                k = min(int(u * len(self.active)), len(self.active) - 1)
                self.scapegoat = self.active[k]
            else:
                self.scapegoat = None


class DelayedCoalition:
    """Delay wrapper: the distributor sees position i only after i+1..i+B
    have been distributed, so a member disconnected on the basis of position
    i has already contributed to those B forgeries.

    ``forge(i)`` forges ahead through position i+B (capped at the horizon)
    with the inner coalition's state at forge time, then returns the buffered
    bit; ``on_disconnect`` reaches the inner coalition immediately, which by
    construction only affects positions beyond the look-ahead.  B=0 is the
    identity wrapper.
    """

    def __init__(self, inner: Coalition, B: int,
                 column_bits: Callable[[int, Sequence[int]], Sequence[int]]):
        if B < 0:
            raise ValueError("delay B must be >= 0")
        self.inner = inner
        self.B = B
        self._column_bits = column_bits
        self._buffer: dict[int, int] = {}
        self._produced = 0
        self.horizon: Optional[int] = None  # last position ever broadcast

    @property
    def members(self):
        return self.inner.members

    @property
    def active(self):
        return self.inner.active

    @property
    def is_active(self) -> bool:
        return self.inner.is_active

    def _produce_through(self, t: int) -> None:
        if self.horizon is not None:
            t = min(t, self.horizon)
        while self._produced < t and self.inner.is_active:
            i = self._produced + 1
            bits = self._column_bits(i, self.inner.active)
            self._buffer[i] = self.inner.forge(i, bits)
            self._produced = i

    def forge(self, i: int, bits=None) -> int:
        """Observed forgery for position i (bits argument ignored; the
        wrapper fetches columns itself to forge ahead)."""
        self._produce_through(i + self.B)
        if i not in self._buffer:
            raise EmptyCoalitionError(
                f"no pirate output for position {i} (coalition died earlier)")
        return self._buffer.pop(i)

    def pending(self, i: int) -> bool:
        """Whether position i was already broadcast (buffered or produced)."""
        return i <= self._produced

    def on_disconnect(self, user: int, position: int) -> None:
        self.inner.on_disconnect(user, position)


def delay_wrap(coalition: Coalition, B: int, column_bits) -> DelayedCoalition:
    """Wrap a coalition for a weakly dynamic run with feedback delay B."""
    return DelayedCoalition(coalition, B, column_bits)
