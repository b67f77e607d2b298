"""Collusion-resistant traitor tracing with Tardos fingerprinting codes.

Implements the static scheme with the symmetric score function, its dynamic
extension (per-position disconnection), two weakly dynamic variants for
delayed feedback, and the universal (coalition-size-free) scheme, together
with the numerical optimization of their tuning constants, reproducible code
generation, pirate-strategy simulation and a Monte Carlo harness.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .distributions import BiasDistribution, disregard_fraction, sample_bias
from .model import (InfeasibleError, LadderEntry, ProblemInstance,
                    SchemeParameters, TuningConstants, UniversalLadder,
                    derive_scheme_params, eta)
from .optimize import (allocate_eps, build_universal_ladder, h, lambda_a,
                       lambda_b, make_c_grid, margins, optimize_constants,
                       optimize_scheme, sweep_d_ell,
                       weakly_dynamic_A_total_bound)
from .codegen import (CodeBook, StreamingCode, generate_position,
                      read_codebook, write_codebook)
from .strategies import STRATEGIES, Coalition, EmptyCoalitionError, delay_wrap
from .tracers import (TraceTranscript, position_score, run_dynamic,
                      run_universal, run_weakly_dynamic_A,
                      run_weakly_dynamic_B, static_trace, trace_crossings)
from .harness import (ExperimentConfig, TrialStats, run_trials, summarize,
                      trajectory_rows)

__all__ = [
    "BACKEND", "BiasDistribution", "CodeBook", "Coalition",
    "EmptyCoalitionError", "ExperimentConfig", "InfeasibleError",
    "LadderEntry", "ProblemInstance", "STRATEGIES", "SchemeParameters",
    "StreamingCode", "TraceTranscript", "TrialStats", "TuningConstants",
    "UniversalLadder", "allocate_eps", "build_universal_ladder",
    "delay_wrap", "derive_scheme_params", "disregard_fraction", "eta",
    "generate_position", "h", "lambda_a", "lambda_b", "make_c_grid",
    "margins", "optimize_constants", "optimize_scheme", "position_score",
    "read_codebook", "run_dynamic", "run_trials", "run_universal",
    "run_weakly_dynamic_A", "run_weakly_dynamic_B", "sample_bias",
    "static_trace", "summarize", "sweep_d_ell", "trace_crossings",
    "trajectory_rows", "weakly_dynamic_A_total_bound", "write_codebook",
]
