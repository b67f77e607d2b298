"""Seeded Monte Carlo experiment runner.

A trial simulates one broadcast: generate codewords (streaming), let the
coalition forge, trace, and collect outcomes.  Pirates are scored exactly by
the engines; innocent users are exchangeable conditioned on the biases and
the forged sequence, so the harness explicitly scores only m sampled
innocents (default min(n - c, 10^4)) over the recorded trace, which turns an
n = 10^6 experiment into a desk-scale one.  The sampled-innocent scoring is
exact for the static, dynamic, weakly-B and universal schemes (innocents
never influence the trace); for weakly-A a sampled innocent crossing would
in the true protocol also contaminate a window, so there the sampled
innocents are traced jointly with the pirates.

A trial that does not catch all pirates by the codelength records a censored
catch-all position (+inf) and counts as a completeness failure.

Every exported file embeds (version, effective config, master seed); rerun
with the embedded config to reproduce identical outputs.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps

from . import __version__
from .codegen import StreamingCode
from .model import ProblemInstance, SchemeParameters, UniversalLadder, \
    derive_scheme_params
from .optimize import build_universal_ladder, optimize_constants
from .rng import TAG_SAMPLE, TAG_TRIAL, derive_stream, value64
from .strategies import STRATEGIES, Coalition
from .tracers import (forge_static, run_dynamic, run_universal,
                      run_weakly_dynamic_A, run_weakly_dynamic_B,
                      score_pairs, total_scores, trace_crossings,
                      universal_crossings)

SCHEMES = ("static", "dynamic", "weakly-dynamic-A", "weakly-dynamic-B",
           "universal")

TRAJECTORY_HEADER = ["position", "user", "entry_c", "score", "event"]
SUMMARY_HEADER = ["scheme", "strategy", "c", "c0", "n", "eps1", "eps2",
                  "ell_theoretical", "median_catch", "p95_catch", "fp_rate",
                  "trials"]


@dataclass
class ExperimentConfig:
    """One experiment: instance, scheme, strategy, trial count, seed."""

    scheme: str
    n: int
    eps1: float
    eps2: float
    c0: int
    coalition_size: int
    strategy: str = "interleaving"
    B: int = 0
    trials: int = 100
    innocent_sample: Optional[int] = None  # default min(n - c, 10^4)
    seed: int = 1
    coalition_rule: str = "first"  # or "random"
    universal_c_max: Optional[int] = None  # default c0
    universal_grid: str = "auto"
    universal_ratio: int = 2
    universal_cutoff: str = "none"  # "none" (pure arcsine) or "c_max"
    trajectory_stride: int = 50

    def validation_errors(self) -> list[str]:
        errs = []
        if self.scheme not in SCHEMES:
            errs.append(f"unknown scheme {self.scheme!r}")
        if self.strategy not in STRATEGIES:
            errs.append(f"unknown strategy {self.strategy!r}")
        if self.n < 2:
            errs.append("n must be >= 2")
        for name in ("eps1", "eps2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                errs.append(f"{name} must be in (0,1), got {v}")
        if not 2 <= self.c0 <= self.n:
            errs.append(f"c0 must satisfy 2 <= c0 <= n, got {self.c0}")
        if not 1 <= self.coalition_size <= self.n:
            errs.append("coalition_size must be in [1, n]")
        if self.scheme.startswith("weakly") and self.B < 1:
            errs.append("weakly dynamic schemes need B >= 1")
        if not self.scheme.startswith("weakly") and self.B != 0:
            errs.append("B must be 0 except for weakly dynamic schemes")
        if self.trials < 1:
            errs.append("trials must be >= 1")
        m = self.innocent_sample
        if m is not None and not 0 <= m <= self.n - self.coalition_size:
            errs.append("innocent_sample must be in [0, n - coalition_size]")
        if self.coalition_rule not in ("first", "random"):
            errs.append(f"unknown coalition_rule {self.coalition_rule!r}")
        if self.universal_cutoff not in ("none", "c_max"):
            errs.append(f"unknown universal_cutoff {self.universal_cutoff!r}")
        if self.trajectory_stride < 1:
            errs.append("trajectory_stride must be >= 1")
        return errs

    def validate(self) -> None:
        errs = self.validation_errors()
        if errs:
            raise ValueError("invalid experiment config: " + "; ".join(errs))

    @property
    def m_innocents(self) -> int:
        if self.innocent_sample is not None:
            return self.innocent_sample
        return min(self.n - self.coalition_size, 10_000)

    def instance(self) -> ProblemInstance:
        B = self.B if self.scheme.startswith("weakly") else 0
        return ProblemInstance(n=self.n, eps1=self.eps1, eps2=self.eps2,
                               c0=self.c0, B=B, variant=self.scheme)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class TrialStats:
    """Per-trial outcomes plus the derived aggregates."""

    config: ExperimentConfig
    ell_theoretical: int
    catch_all: list = field(default_factory=list)  # inf when censored
    pirate_catch_positions: list = field(default_factory=list)
    innocent_crossings: list = field(default_factory=list)
    innocents_scored: list = field(default_factory=list)
    coalition_score_final: list = field(default_factory=list)
    scored_positions: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    pirates_caught: list = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.catch_all)

    @property
    def completeness_failures(self) -> int:
        """Trials that failed to catch the whole coalition by the end
        (static: trials that caught no pirate at all)."""
        if self.config.scheme == "static":
            return sum(1 for k in self.pirates_caught if k == 0)
        return sum(1 for t in self.catch_all if math.isinf(t))

    @property
    def fp_user_trials(self) -> int:
        return int(sum(self.innocents_scored))

    @property
    def fp_count(self) -> int:
        return int(sum(self.innocent_crossings))

    @property
    def fp_rate(self) -> float:
        n = self.fp_user_trials
        return self.fp_count / n if n else float("nan")

    def fp_confidence(self, level: float = 0.95) -> tuple[float, float]:
        """Clopper-Pearson interval for the per-user accusation probability."""
        k, n = self.fp_count, self.fp_user_trials
        if n == 0:
            return (float("nan"), float("nan"))
        alpha = 1.0 - level
        lo = 0.0 if k == 0 else float(sps.beta.ppf(alpha / 2, k, n - k + 1))
        hi = 1.0 if k == n else float(sps.beta.ppf(1 - alpha / 2, k + 1,
                                                   n - k))
        return lo, hi

    def median_catch(self) -> float:
        if not self.catch_all:
            return float("nan")
        return float(np.median(self.catch_all))

    def p95_catch(self) -> float:
        if not self.catch_all:
            return float("nan")
        return float(np.quantile(self.catch_all, 0.95))

    def mean_catch(self) -> float:
        if not self.catch_all:
            return float("nan")
        return float(np.mean(self.catch_all))

    def aggregates(self) -> dict:
        return {
            "trials": self.trials,
            "median_catch": self.median_catch(),
            "p95_catch": self.p95_catch(),
            "mean_catch": self.mean_catch(),
            "completeness_failures": self.completeness_failures,
            "fp_count": self.fp_count,
            "fp_user_trials": self.fp_user_trials,
            "fp_rate": self.fp_rate,
            "fp_ci95": list(self.fp_confidence()),
        }

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["aggregates"] = self.aggregates()
        return d


def _trial_seed(master: int, t: int) -> int:
    return value64(derive_stream(master, TAG_TRIAL), t)


def _pick_coalition(cfg: ExperimentConfig, trial_seed: int) -> list[int]:
    c = cfg.coalition_size
    if cfg.coalition_rule == "first":
        return list(range(c))
    rng = np.random.default_rng(trial_seed ^ 0xC0A1)
    return sorted(int(u) for u in rng.choice(cfg.n, size=c, replace=False))


def _sample_innocents(cfg: ExperimentConfig, trial_seed: int,
                      coalition: list[int]) -> np.ndarray:
    m = cfg.m_innocents
    pool = np.setdiff1d(np.arange(cfg.n, dtype=np.int64),
                        np.asarray(coalition, dtype=np.int64))
    if m >= len(pool):
        return pool
    rng = np.random.default_rng(trial_seed ^ TAG_SAMPLE)
    return np.sort(rng.choice(pool, size=m, replace=False))


@dataclass
class DerivedParams:
    """Optimizer output shared across trials of one experiment."""

    params: Optional[SchemeParameters] = None
    ladder: Optional[UniversalLadder] = None
    delta_code: float = 0.0
    ell: int = 0


def derive_experiment(cfg: ExperimentConfig) -> DerivedParams:
    """Optimize constants / build the ladder for an experiment config."""
    if cfg.scheme == "universal":
        ladder = build_universal_ladder(cfg.n, cfg.eps1, cfg.eps2,
                                        c_max=cfg.universal_c_max or cfg.c0,
                                        grid=cfg.universal_grid,
                                        ratio=cfg.universal_ratio)
        delta_code = (ladder.entries[-1].delta
                      if cfg.universal_cutoff == "c_max" else 0.0)
        return DerivedParams(ladder=ladder, delta_code=delta_code,
                             ell=ladder.entries[-1].ell)
    inst = cfg.instance()
    tc = optimize_constants(inst)
    params = derive_scheme_params(inst, tc)
    return DerivedParams(params=params, delta_code=params.delta,
                         ell=params.ell)


def run_trials(cfg: ExperimentConfig,
               derived: Optional[DerivedParams] = None) -> TrialStats:
    """Run the experiment; one independent stream per trial index."""
    cfg.validate()
    derived = derived or derive_experiment(cfg)
    stats = TrialStats(config=cfg, ell_theoretical=derived.ell)
    for t in range(cfg.trials):
        tseed = _trial_seed(cfg.seed, t)
        _run_one(cfg, derived, tseed, stats)
    return stats


def _make_code(cfg, derived, tseed, coalition_ids, innocents):
    membership = np.asarray(coalition_ids, dtype=np.int64)
    if cfg.scheme == "weakly-dynamic-A":
        # innocent crossings must be able to trigger contamination windows:
        # trace pirates and sampled innocents jointly
        tracked = np.concatenate([membership, innocents])
    else:
        tracked = membership
    return StreamingCode(seed=tseed, n=len(tracked),
                         delta_used=derived.delta_code, user_ids=tracked)


def _run_trace(cfg, derived, code, coalition, stride: int = 0):
    if cfg.scheme == "universal":
        return run_universal(derived.ladder, code, coalition,
                             record_positions=True,
                             trajectory_stride=stride)
    if cfg.scheme == "dynamic":
        return run_dynamic(derived.params, code, coalition,
                           record_positions=True, trajectory_stride=stride)
    if cfg.scheme == "weakly-dynamic-A":
        return run_weakly_dynamic_A(derived.params, code, coalition, cfg.B,
                                    record_positions=True,
                                    trajectory_stride=stride)
    return run_weakly_dynamic_B(derived.params, code, coalition, cfg.B,
                                record_positions=True,
                                trajectory_stride=stride)


def _run_one(cfg, derived, tseed, stats: TrialStats) -> None:
    coalition_ids = _pick_coalition(cfg, tseed)
    coalition = Coalition(coalition_ids, cfg.strategy, tseed)
    innocents = _sample_innocents(cfg, tseed, coalition_ids)
    code = _make_code(cfg, derived, tseed, coalition_ids, innocents)

    if cfg.scheme == "static":
        params = derived.params
        y = forge_static(code, coalition, params.ell)
        p = code.biases(1, params.ell + 1)
        pirate_scores = total_scores(code, p, y)
        caught = int(np.sum(pirate_scores > params.Z))
        stats.pirates_caught.append(caught)
        stats.catch_all.append(float(params.ell))
        stats.pirate_catch_positions.append([None] * len(coalition_ids))
        stats.coalition_score_final.append(float(np.sum(pirate_scores)))
        stats.scored_positions.append(params.ell)
        stats.slopes.append(float(np.sum(pirate_scores)) / params.ell)
        icode = StreamingCode(seed=tseed, n=len(innocents),
                              delta_used=derived.delta_code,
                              user_ids=innocents)
        iscores = total_scores(icode, p, y)
        stats.innocent_crossings.append(int(np.sum(iscores > params.Z)))
        stats.innocents_scored.append(len(innocents))
        return

    tr = _run_trace(cfg, derived, code, coalition)
    caught = tr.pirates_caught()
    stats.pirates_caught.append(len(caught))
    stats.catch_all.append(float(tr.catch_all_position)
                           if tr.catch_all_position else float("inf"))
    cpos = tr.catch_positions()
    stats.pirate_catch_positions.append([cpos.get(u) for u in coalition_ids])
    stats.scored_positions.append(tr.scored_positions)
    # total score accumulated by the coalition (frozen at disconnection)
    rows = [int(np.flatnonzero(tr.tracked_ids == u)[0])
            for u in coalition_ids]
    total = float(np.sum(tr.final_scores[rows]))
    stats.coalition_score_final.append(total)
    stats.slopes.append(total / max(tr.scored_positions, 1))

    if cfg.scheme == "weakly-dynamic-A":
        inn_set = set(int(u) for u in innocents)
        crossings = sum(1 for u in tr.innocents_accused() if u in inn_set)
        stats.innocent_crossings.append(crossings)
        stats.innocents_scored.append(len(innocents))
        return

    icode = StreamingCode(seed=tseed, n=len(innocents),
                          delta_used=derived.delta_code, user_ids=innocents)
    if len(innocents) == 0 or tr.positions_observed == 0:
        stats.innocent_crossings.append(0)
    elif cfg.scheme == "universal":
        crossed, _ = universal_crossings(icode, derived.ladder, tr.bias,
                                         tr.y)
        stats.innocent_crossings.append(int(crossed.sum()))
    else:
        _, crossed, _, _, _ = trace_crossings(icode, tr.bias, tr.y,
                                              tr.scored_mask,
                                              derived.params.Z)
        stats.innocent_crossings.append(int(crossed.sum()))
    stats.innocents_scored.append(len(innocents))


# --- trajectory export (first trial, for the plotting component) ------------

def _window_extrema(env, stride):
    """Min/max of each stride window, so downsampling keeps the extremes."""
    n = len(env)
    mins, maxs, pos = [], [], []
    for hi in range(stride, n + stride, stride):
        lo = hi - stride
        if lo >= n:
            break
        w = env[lo:min(hi, n)]
        mins.append(float(np.min(w)))
        maxs.append(float(np.max(w)))
        pos.append(min(hi, n))
    return pos, mins, maxs


def trajectory_rows(cfg: ExperimentConfig,
                    derived: Optional[DerivedParams] = None,
                    trial: int = 0) -> list[tuple]:
    """Trajectory CSV rows for one trial: pirate score curves, innocent
    min/max envelope, disconnect markers and (universal) threshold steps."""
    cfg.validate()
    derived = derived or derive_experiment(cfg)
    tseed = _trial_seed(cfg.seed, trial)
    coalition_ids = _pick_coalition(cfg, tseed)
    coalition = Coalition(coalition_ids, cfg.strategy, tseed)
    innocents = _sample_innocents(cfg, tseed, coalition_ids)
    code = _make_code(cfg, derived, tseed, coalition_ids, innocents)
    stride = cfg.trajectory_stride
    rows: list[tuple] = []

    if cfg.scheme == "static":
        params = derived.params
        y = forge_static(code, coalition, params.ell)
        p = code.biases(1, params.ell + 1)
        s0, s1 = score_pairs(p, y)
        scores = np.zeros(code.n)
        for i in range(1, params.ell + 1):
            col = code.column(i, float(p[i - 1]))
            scores += np.where(col.astype(bool), s1[i - 1], s0[i - 1])
            if i % stride == 0 or i == params.ell:
                for j, uid in enumerate(code.user_ids):
                    rows.append((i, int(uid), 0, float(scores[j]), "score"))
        z, ell = params.Z, params.ell
        tr_bias, tr_y, tr_mask = p, y, None
        ladder = t_hist = None
        observed = params.ell
    else:
        tr = _run_trace(cfg, derived, code, coalition, stride=stride)
        members = set(tr.coalition_members)
        if tr.trajectories is not None:
            for k in range(tr.trajectories.shape[1]):
                pos = (k + 1) * stride
                for j, uid in enumerate(tr.tracked_ids):
                    if int(uid) in members:
                        rows.append((pos, int(uid), 0,
                                     float(tr.trajectories[j, k]), "score"))
        for e in tr.disconnect_events():
            rows.append((e.position, e.user, e.entry_c, float(e.score),
                         "disconnect"))
        z = derived.params.Z if derived.params else math.inf
        tr_bias, tr_y, tr_mask = tr.bias, tr.y, tr.scored_mask
        ladder, t_hist = tr.ladder, tr.t_history
        observed = tr.positions_observed

    if len(innocents) and tr_bias is not None and len(tr_bias):
        icode = StreamingCode(seed=tseed, n=len(innocents),
                              delta_used=derived.delta_code,
                              user_ids=innocents)
        _, _, _, env_min, env_max = trace_crossings(
            icode, tr_bias, tr_y, tr_mask, z, want_envelope=True)
        pos, mins, maxs = _window_extrema(env_min, stride)
        for pp, v in zip(pos, mins):
            rows.append((pp, -1, 0, v, "env_min"))
        pos, mins, maxs = _window_extrema(env_max, stride)
        for pp, v in zip(pos, maxs):
            rows.append((pp, -2, 0, v, "env_max"))

    if ladder is not None and t_hist is not None:
        # stepped thresholds: entry c is consulted until t passes ell_c
        for k, entry in enumerate(ladder.entries):
            over = np.flatnonzero(t_hist[:, k] > entry.ell)
            end = int(over[0]) + 1 if over.size else observed
            rows.append((end, -3, entry.c, float(entry.Z), "threshold"))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def summarize(stats_list, baseline=None) -> list[dict]:
    """Comparison rows (one per experiment) in the summary CSV schema."""
    if isinstance(stats_list, TrialStats):
        stats_list = [stats_list]
    rows = []
    for st in stats_list:
        cfg = st.config
        rows.append({
            "scheme": cfg.scheme,
            "strategy": cfg.strategy,
            "c": cfg.coalition_size,
            "c0": cfg.c0,
            "n": cfg.n,
            "eps1": cfg.eps1,
            "eps2": cfg.eps2,
            "ell_theoretical": st.ell_theoretical,
            "median_catch": st.median_catch(),
            "p95_catch": st.p95_catch(),
            "fp_rate": st.fp_rate,
            "trials": st.trials,
        })
    if baseline is not None:
        rows.extend(summarize(baseline))
    return rows


def _provenance(cfg: ExperimentConfig) -> dict:
    return {"tool": "tardos", "version": __version__,
            "seed": cfg.seed, "config": cfg.to_dict()}


def export_summary_json(stats: TrialStats, path) -> None:
    doc = {"provenance": _provenance(stats.config),
           "summary": summarize(stats)[0],
           "aggregates": stats.aggregates()}
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)


def load_summary_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def export_summary_csv(rows, path,
                       cfg: Optional[ExperimentConfig] = None) -> None:
    """Summary CSV; first line is a '# provenance: {...}' comment."""
    with open(path, "w", newline="") as f:
        if cfg is not None:
            f.write("# provenance: " + json.dumps(_provenance(cfg)) + "\n")
        w = csv.DictWriter(f, fieldnames=SUMMARY_HEADER)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def export_trajectories_csv(rows, path,
                            cfg: Optional[ExperimentConfig] = None) -> None:
    """Trajectory CSV: position,user,entry_c,score,event."""
    with open(path, "w", newline="") as f:
        if cfg is not None:
            f.write("# provenance: " + json.dumps(_provenance(cfg)) + "\n")
        w = csv.writer(f)
        w.writerow(TRAJECTORY_HEADER)
        for r in rows:
            w.writerow(r)
