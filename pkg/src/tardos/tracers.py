"""Accusation engines: static, dynamic, weakly dynamic (A/B) and universal.

All engines share the symmetric per-position score

    x=1,y=1: +sqrt((1-p)/p)      x=1,y=0: -sqrt((1-p)/p)
    x=0,y=1: -sqrt(p/(1-p))      x=0,y=0: +sqrt(p/(1-p))

and the strict disconnection rule S > Z.  A disconnected user's score is
frozen at the crossing value, which necessarily lies in
(Z, Z + sqrt((1-delta)/delta)].

The engines track every user of the code source they are given and treat
them uniformly: any tracked user whose score crosses the threshold is
disconnected, pirate or not.  Pirate membership only matters for forging and
for the catch-all bookkeeping.  Innocents at scale are handled separately:
because users are independent given the forged sequence, they can be scored
after the fact over the recorded trace (:func:`trace_crossings`), which is
what the experiment harness does.

Positions are 1-based everywhere, matching the construction.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backend import K
from .codegen import CodeBook, position_bases
from .model import SchemeParameters, UniversalLadder
from .strategies import Coalition, DelayedCoalition

_POS_BLOCK = 1024


def position_score(x: int, y: int, p: float) -> float:
    """Symmetric accusation score of one position."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"bias must be inside (0,1), got {p}")
    if y:
        return math.sqrt((1.0 - p) / p) if x else -math.sqrt(p / (1.0 - p))
    return -math.sqrt((1.0 - p) / p) if x else math.sqrt(p / (1.0 - p))


def score_pair(p: float, y: int) -> tuple[float, float]:
    """(score for x=0, score for x=1) at bias p given forged bit y."""
    sp = math.sqrt((1.0 - p) / p)
    sm = math.sqrt(p / (1.0 - p))
    return (-sm, sp) if y else (sm, -sp)


def score_pairs(p: np.ndarray, y: np.ndarray):
    """Vectorized :func:`score_pair` over positions."""
    sp = np.sqrt((1.0 - p) / p)
    sm = np.sqrt(p / (1.0 - p))
    yb = y.astype(bool)
    s0 = np.where(yb, -sm, sm)
    s1 = np.where(yb, sp, -sp)
    return s0, s1


@dataclass
class TraceEvent:
    position: int
    kind: str  # "disconnect" | "contamination"
    user: int = -1  # global user id (disconnect)
    entry_c: int = 0  # ladder entry that triggered (universal)
    score: float = 0.0  # frozen score (disconnect)
    until: int = 0  # window end (contamination)


@dataclass
class TraceTranscript:
    """Everything observable about one tracing run."""

    variant: str
    coalition_members: tuple
    tracked_ids: np.ndarray
    Z: Optional[float]
    ell: Optional[int]  # scored-position budget (None for universal)
    events: list = field(default_factory=list)
    accused: tuple = ()
    catch_all_position: Optional[int] = None
    termination: str = ""
    positions_observed: int = 0
    positions_broadcast: int = 0
    scored_positions: int = 0
    final_scores: Optional[np.ndarray] = None
    # optional per-position recordings
    bias: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    scored_mask: Optional[np.ndarray] = None
    trajectories: Optional[np.ndarray] = None  # tracked x sampled positions
    trajectory_stride: int = 0
    # universal extras
    ladder: Optional[UniversalLadder] = None
    t_counters: Optional[np.ndarray] = None
    t_history: Optional[np.ndarray] = None
    entry_caught: dict = field(default_factory=dict)
    final_scores_universal: Optional[np.ndarray] = None

    def disconnect_events(self) -> list:
        return [e for e in self.events if e.kind == "disconnect"]

    def catch_positions(self) -> dict:
        """Global user id -> position of disconnection."""
        return {e.user: e.position for e in self.disconnect_events()}

    def pirates_caught(self) -> tuple:
        members = set(self.coalition_members)
        return tuple(u for u in self.accused if u in members)

    def innocents_accused(self) -> tuple:
        members = set(self.coalition_members)
        return tuple(u for u in self.accused if u not in members)

    def summary_dict(self) -> dict:
        return {
            "variant": self.variant,
            "coalition": list(self.coalition_members),
            "accused": list(self.accused),
            "catch_all_position": self.catch_all_position,
            "termination": self.termination,
            "positions_observed": self.positions_observed,
            "positions_broadcast": self.positions_broadcast,
            "scored_positions": self.scored_positions,
            "pirates_caught": len(self.pirates_caught()),
            "innocents_accused": len(self.innocents_accused()),
        }

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.summary_dict(), f, indent=2)

    def write_events_csv(self, path) -> None:
        """One row per event: position,event,user,entry_c,score,p,y."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["position", "event", "user", "entry_c", "score",
                        "p", "y"])
            for e in self.events:
                p_i = y_i = ""
                if self.bias is not None and 1 <= e.position <= len(self.bias):
                    p_i = repr(float(self.bias[e.position - 1]))
                    y_i = int(self.y[e.position - 1])
                if e.kind == "disconnect":
                    w.writerow([e.position, "disconnect", e.user, e.entry_c,
                                repr(e.score), p_i, y_i])
                else:
                    w.writerow([e.position, "contamination", "", "",
                                e.until, p_i, y_i])


class _ColumnFeed:
    """Blocked prefetch of biases and bit columns for one run."""

    def __init__(self, code, horizon: Optional[int]):
        self.code = code
        self.horizon = horizon
        self._blocks = {}

    def _block(self, bi: int):
        blk = self._blocks.get(bi)
        if blk is None:
            lo = bi * _POS_BLOCK + 1
            hi = lo + _POS_BLOCK
            if self.horizon is not None:
                hi = min(hi, self.horizon + 1)
            p = self.code.biases(lo, hi)
            if isinstance(self.code, CodeBook):
                cols = self.code.matrix[:, lo - 1:hi - 1]
            else:
                bases = position_bases(self.code.seed, lo, hi)
                cols = K.bit_matrix(bases, self.code.user_ids, p)
            blk = (p, cols)
            self._blocks[bi] = blk
            if len(self._blocks) > 4:
                self._blocks.pop(min(self._blocks))
        return blk

    def get(self, i: int):
        """(p_i, column) for 1-based position i."""
        if self.horizon is not None and i > self.horizon:
            raise IndexError(f"position {i} beyond code length {self.horizon}")
        bi, off = divmod(i - 1, _POS_BLOCK)
        p, cols = self._block(bi)
        return float(p[off]), np.ascontiguousarray(cols[:, off])


def _code_length(code) -> Optional[int]:
    return code.ell if isinstance(code, CodeBook) else None


def _threshold_trace(code, coalition: Coalition, Z: float, max_scored: int,
                     variant: str, B: int = 0, contaminate: bool = False,
                     record_positions: bool = False,
                     trajectory_stride: int = 0) -> TraceTranscript:
    """Shared loop of the dynamic and weakly dynamic engines.

    Observes positions in order; with B > 0 the coalition is wrapped so that
    forging runs B positions ahead of observation.  With ``contaminate`` a
    disconnection at observed position i0 marks (i0, i0+B] as disregarded
    (windows merge: a trigger inside an existing window extends it to B
    positions past the new trigger; simultaneous crossers share one window).
    """
    n = code.n
    ids = code.user_ids
    row_of = {int(g): r for r, g in enumerate(ids)}
    for m in coalition.members:
        if m not in row_of:
            raise ValueError(f"coalition member {m} is not a tracked user")

    code_len = _code_length(code)
    # weakly-B broadcasts exactly the codelength; variant A may broadcast up
    # to B extra positions per disconnection event
    if contaminate:
        horizon = code_len
    else:
        horizon = max_scored if code_len is None else min(max_scored, code_len)
    feed = _ColumnFeed(code, horizon)

    def col_bits(i, members):
        _, col = feed.get(i)
        return [int(col[row_of[m]]) for m in members]

    wrapped = DelayedCoalition(coalition, B, col_bits)
    wrapped.horizon = horizon

    scores = np.zeros(n)
    active = np.ones(n, dtype=np.uint8)
    members_set = set(coalition.members)
    pirates_left = len(coalition.members)
    accused: list[int] = []
    events: list[TraceEvent] = []
    skip_until = 0
    catch_all = None
    bias_rec: list[float] = []
    y_rec: list[int] = []
    scored_rec: list[int] = []
    traj: list[np.ndarray] = []

    i = 0
    scored = 0
    termination = ""
    while scored < max_scored:
        nxt = i + 1
        if horizon is not None and nxt > horizon:
            break
        if not coalition.is_active and not wrapped.pending(nxt):
            break  # no pirate output and nothing in flight
        i = nxt
        p, col = feed.get(i)
        y = wrapped.forge(i)
        contaminated = contaminate and i <= skip_until
        if not contaminated:
            s0, s1 = score_pair(p, y)
            newly = K.step_scores(scores, active, col, s0, s1, Z)
            scored += 1
            if newly.size:
                for row in newly:
                    active[row] = 0
                    gid = int(ids[row])
                    accused.append(gid)
                    events.append(TraceEvent(position=i, kind="disconnect",
                                             user=gid,
                                             score=float(scores[row])))
                    if gid in members_set and gid in wrapped.active:
                        wrapped.on_disconnect(gid, i)
                        pirates_left -= 1
                if pirates_left == 0 and catch_all is None:
                    catch_all = i
                if contaminate:
                    skip_until = max(skip_until, i + B)
                    events.append(TraceEvent(position=i, kind="contamination",
                                             until=skip_until))
        if record_positions:
            bias_rec.append(p)
            y_rec.append(y)
            scored_rec.append(0 if contaminated else 1)
        if trajectory_stride and i % trajectory_stride == 0:
            traj.append(scores.copy())
    if pirates_left == 0:
        termination = "all_caught" if catch_all is not None else "no_output"
    else:
        termination = "code_exhausted"

    return TraceTranscript(
        variant=variant,
        coalition_members=tuple(coalition.members),
        tracked_ids=ids,
        Z=Z,
        ell=max_scored,
        events=events,
        accused=tuple(accused),
        catch_all_position=catch_all,
        termination=termination,
        positions_observed=i,
        positions_broadcast=max(i, wrapped._produced),
        scored_positions=scored,
        final_scores=scores,
        bias=np.asarray(bias_rec) if record_positions else None,
        y=np.asarray(y_rec, dtype=np.uint8) if record_positions else None,
        scored_mask=(np.asarray(scored_rec, dtype=np.uint8)
                     if record_positions else None),
        trajectories=np.asarray(traj).T if trajectory_stride else None,
        trajectory_stride=trajectory_stride,
    )


def run_dynamic(params: SchemeParameters, code, coalition: Coalition,
                record_positions: bool = False,
                trajectory_stride: int = 0) -> TraceTranscript:
    """Dynamic scheme: score and compare to Z after every position."""
    return _threshold_trace(code, coalition, params.Z, params.ell,
                            "dynamic", B=0,
                            record_positions=record_positions,
                            trajectory_stride=trajectory_stride)


def run_weakly_dynamic_A(params: SchemeParameters, code,
                         coalition: Coalition, B: int,
                         record_positions: bool = False,
                         trajectory_stride: int = 0) -> TraceTranscript:
    """Disregard-window scheme: plain dynamic constants; each disconnection
    contaminates the next B broadcast positions, which are never scored."""
    if B < 1:
        raise ValueError("weakly dynamic runs need B >= 1")
    return _threshold_trace(code, coalition, params.Z, params.ell,
                            "weakly-dynamic-A", B=B, contaminate=True,
                            record_positions=record_positions,
                            trajectory_stride=trajectory_stride)


def run_weakly_dynamic_B(params_B: SchemeParameters, code,
                         coalition: Coalition, B: int,
                         record_positions: bool = False,
                         trajectory_stride: int = 0) -> TraceTranscript:
    """Delayed-observation scheme: constants optimized for delay B; every
    position is scored, decisions lag the broadcast by B positions."""
    if B < 1:
        raise ValueError("weakly dynamic runs need B >= 1")
    return _threshold_trace(code, coalition, params_B.Z, params_B.ell,
                            "weakly-dynamic-B", B=B, contaminate=False,
                            record_positions=record_positions,
                            trajectory_stride=trajectory_stride)


def run_universal(ladder: UniversalLadder, code, coalition: Coalition,
                  max_positions: Optional[int] = None,
                  record_positions: bool = False,
                  trajectory_stride: int = 0) -> TraceTranscript:
    """Universal scheme: one dynamic ladder entry per coalition size.

    Entry c scores only positions whose bias lies inside its own cutoff
    window and stays live until its counter t reaches ell_c (inclusive);
    a user crossing several live entries at once is disconnected once, with
    the lowest crossing size recorded.  Biases may come from the plain
    arcsine distribution (delta_used = 0) or from the top entry's cutoff.
    """
    entries = ladder.entries
    ncols = len(entries)
    deltas = np.array([e.delta for e in entries])
    zs = np.array([e.Z for e in entries])
    ells = np.array([e.ell for e in entries], dtype=np.int64)
    cs = [e.c for e in entries]

    n = code.n
    ids = code.user_ids
    row_of = {int(g): r for r, g in enumerate(ids)}
    for m in coalition.members:
        if m not in row_of:
            raise ValueError(f"coalition member {m} is not a tracked user")

    feed = _ColumnFeed(code, _code_length(code))
    scores = np.zeros((n, ncols))
    t = np.zeros(ncols, dtype=np.int64)
    active = np.ones(n, dtype=np.uint8)
    members_set = set(coalition.members)
    pirates_left = len(coalition.members)
    accused: list[int] = []
    events: list[TraceEvent] = []
    entry_caught: dict[int, int] = {}
    catch_all = None
    bias_rec: list[float] = []
    y_rec: list[int] = []
    t_hist: list[np.ndarray] = []
    traj: list[np.ndarray] = []

    i = 0
    termination = "no_output" if pirates_left == 0 else ""
    while coalition.is_active:
        nxt = i + 1
        if max_positions is not None and nxt > max_positions:
            termination = "code_exhausted"
            break
        code_len = _code_length(code)
        if code_len is not None and nxt > code_len:
            termination = "code_exhausted"
            break
        if np.all(t > ells):
            termination = "ladder_exhausted"
            break
        i = nxt
        p, col = feed.get(i)
        bits = [int(col[row_of[m]]) for m in coalition.active]
        y = coalition.forge(i, bits)
        in_window = ((p >= deltas) & (p <= 1.0 - deltas))
        t += in_window
        consult = (t <= ells).astype(np.uint8)
        update = (in_window.astype(np.uint8) & consult)
        s0, s1 = score_pair(p, y)
        rows, hit_entries = K.step_universal(scores, active, col, s0, s1,
                                             update, consult, zs)
        for row, e_idx in zip(rows, hit_entries):
            active[row] = 0
            gid = int(ids[row])
            accused.append(gid)
            c_hit = cs[int(e_idx)]
            entry_caught[gid] = c_hit
            events.append(TraceEvent(position=i, kind="disconnect", user=gid,
                                     entry_c=c_hit,
                                     score=float(scores[row, int(e_idx)])))
            if gid in members_set and gid in coalition.active:
                coalition.on_disconnect(gid, i)
                pirates_left -= 1
        if pirates_left == 0 and catch_all is None:
            catch_all = i
        if record_positions:
            bias_rec.append(p)
            y_rec.append(y)
            t_hist.append(t.copy())
        if trajectory_stride and i % trajectory_stride == 0:
            traj.append(scores.max(axis=1))
    if not termination:
        termination = "all_caught" if pirates_left == 0 else "code_exhausted"

    return TraceTranscript(
        variant="universal",
        coalition_members=tuple(coalition.members),
        tracked_ids=ids,
        Z=None,
        ell=None,
        events=events,
        accused=tuple(accused),
        catch_all_position=catch_all,
        termination=termination,
        positions_observed=i,
        positions_broadcast=i,
        scored_positions=i,
        final_scores=scores.max(axis=1),
        bias=np.asarray(bias_rec) if record_positions else None,
        y=np.asarray(y_rec, dtype=np.uint8) if record_positions else None,
        scored_mask=(np.ones(i, dtype=np.uint8) if record_positions else None),
        trajectories=np.asarray(traj).T if trajectory_stride else None,
        trajectory_stride=trajectory_stride,
        ladder=ladder,
        t_counters=t,
        t_history=np.asarray(t_hist) if record_positions else None,
        entry_caught=entry_caught,
        final_scores_universal=scores,
    )


# --- batch scoring over a recorded trace ------------------------------------

def _matrix_crossing(matrix, p, s0, s1, scored, z, want_envelope):
    """Materialized-matrix twin of the kernels' crossing_block."""
    m, ell = matrix.shape
    final = np.zeros(m)
    crossed = np.zeros(m, dtype=np.uint8)
    first_pos = np.zeros(m, dtype=np.int64)
    env_min = np.full(ell, np.inf) if want_envelope else np.empty(0)
    env_max = np.full(ell, -np.inf) if want_envelope else np.empty(0)
    for lo in range(0, ell, _POS_BLOCK):
        hi = min(lo + _POS_BLOCK, ell)
        bits = matrix[:, lo:hi].astype(bool)
        sel = np.where(bits, s1[np.newaxis, lo:hi], s0[np.newaxis, lo:hi])
        sel = np.where(scored[np.newaxis, lo:hi].astype(bool), sel, 0.0)
        cum = np.cumsum(sel, axis=1)
        cum += final[:, np.newaxis]
        final = cum[:, -1].copy()
        if want_envelope and m:
            np.minimum(env_min[lo:hi], cum.min(axis=0), out=env_min[lo:hi])
            np.maximum(env_max[lo:hi], cum.max(axis=0), out=env_max[lo:hi])
        hit = cum > z
        newly = np.flatnonzero((crossed == 0) & hit.any(axis=1))
        if newly.size:
            first_pos[newly] = lo + 1 + hit[newly].argmax(axis=1)
            crossed[newly] = 1
    return final, crossed, first_pos, env_min, env_max


def trace_crossings(code, p: np.ndarray, y: np.ndarray, scored: np.ndarray,
                    Z: float, want_envelope: bool = False):
    """Score the code's users over a recorded forged sequence.

    Returns (final_scores, crossed, first_positions, env_min, env_max) where
    ``crossed`` flags users whose running score ever strictly exceeded Z on
    the scored positions.  Scores here are extended scores (no freezing):
    for threshold statistics only the first crossing matters, and the
    envelope is a diagnostic.
    """
    ell = len(p)
    s0, s1 = score_pairs(p, y)
    if scored is None:
        scored = np.ones(ell, dtype=np.uint8)
    if isinstance(code, CodeBook):
        return _matrix_crossing(code.matrix, p, s0, s1, scored, Z,
                                want_envelope)
    bases = position_bases(code.seed, 1, ell + 1)
    return K.crossing_block(bases, code.user_ids, p, s0, s1,
                            scored.astype(np.uint8), Z, want_envelope)


def total_scores(code, p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Static accusation scores: sum of position scores over all positions.

    Accumulation order matches the stepping engines bit for bit.
    """
    s0, s1 = score_pairs(p, y)
    if isinstance(code, CodeBook):
        scored = np.ones(len(p), dtype=np.uint8)
        final, _, _, _, _ = _matrix_crossing(code.matrix, p, s0, s1, scored,
                                             np.inf, False)
        return final
    bases = position_bases(code.seed, 1, len(p) + 1)
    return K.static_scores(bases, code.user_ids, p, s0, s1)


def static_trace(params: SchemeParameters, code, y) -> tuple:
    """Accused set of the static scheme: users with total score above Z."""
    y = np.asarray(y, dtype=np.uint8)
    if len(y) != params.ell:
        raise ValueError(
            f"forgery has {len(y)} positions, scheme expects {params.ell}")
    p = code.biases(1, params.ell + 1)
    scores = total_scores(code, p, y)
    return tuple(int(g) for g in code.user_ids[scores > params.Z])


def forge_static(code, coalition: Coalition, ell: int) -> np.ndarray:
    """Forged sequence of a static run (no disconnections ever happen)."""
    ids = code.user_ids
    row_of = {int(g): r for r, g in enumerate(ids)}
    feed = _ColumnFeed(code, _code_length(code) or ell)
    y = np.empty(ell, dtype=np.uint8)
    for i in range(1, ell + 1):
        _, col = feed.get(i)
        bits = [int(col[row_of[m]]) for m in coalition.active]
        y[i - 1] = coalition.forge(i, bits)
    return y


def universal_crossings(code, ladder: UniversalLadder, p: np.ndarray,
                        y: np.ndarray):
    """Per-user crossing of any live ladder entry over a recorded trace.

    For each entry c the scored mask is the in-window positions up to the
    ell_c-th one (the live prefix).  Returns (crossed, first_positions)
    arrays over the code's users.
    """
    m = code.n
    crossed = np.zeros(m, dtype=np.uint8)
    first = np.zeros(m, dtype=np.int64)
    for e in ladder.entries:
        in_w = (p >= e.delta) & (p <= 1.0 - e.delta)
        t = np.cumsum(in_w)
        live = in_w & (t <= e.ell)
        _, cr, fp, _, _ = trace_crossings(code, p, y,
                                          live.astype(np.uint8), e.Z)
        hit = cr.astype(bool)
        fresh = hit & (crossed == 0)
        first[fresh] = fp[fresh]
        earlier = hit & (crossed == 1) & (fp < first)
        first[earlier] = fp[earlier]
        crossed |= cr
    return crossed, first
