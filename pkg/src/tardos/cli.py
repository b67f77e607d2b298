"""Command-line entry point.

Subcommands: optimize, ladder, generate, trace, simulate, report.
Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
TARDOS_OUT_DIR sets the default output directory.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .codegen import CodeBook, StreamingCode, write_codebook
from .harness import (ExperimentConfig, derive_experiment,
                      export_summary_csv, export_trajectories_csv,
                      export_summary_json, load_summary_json, run_trials,
                      summarize, trajectory_rows)
from .model import (InfeasibleError, ProblemInstance, derive_scheme_params,
                    to_dict)
from .optimize import (build_universal_ladder, optimize_constants,
                       sweep_d_ell, weakly_dynamic_A_total_bound)
from .strategies import STRATEGIES, Coalition

_VARIANT_FLAGS = {
    "static": "static",
    "dynamic": "dynamic",
    "weakly-a": "weakly-dynamic-A",
    "weakly-b": "weakly-dynamic-B",
    "universal": "universal",
}


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get("TARDOS_OUT_DIR", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _args_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _provenance(args_dict: dict) -> dict:
    return {"tool": "tardos", "version": __version__, "config": args_dict}


def _print_params_table(inst, tc, params, label) -> None:
    print(f"=== {label} ===")
    print(f"instance: n={inst.n:g} eps1={inst.eps1:g} eps2={inst.eps2:g} "
          f"c0={inst.c0} B={inst.B} eta={inst.eta:.6f}")
    print(f"constants: d_ell={tc.d_ell:.4f} d_z={tc.d_z:.4f} "
          f"d_delta={tc.d_delta:.4f}")
    print(f"witnesses: a={tc.a:.6f} b={tc.b:.6f} "
          f"lambda_a={tc.lambda_a:.6f} lambda_b={tc.lambda_b:.6f}")
    print(f"margins:   soundness={tc.soundness_margin:.3e} "
          f"completeness={tc.completeness_margin:.3e}")
    print(f"derived:   ell={params.ell} Z={params.Z:.2f} "
          f"delta={params.delta:.4e}")


def cmd_optimize(args) -> int:
    variant = _VARIANT_FLAGS[args.variant]
    B = args.B or 0
    if variant.startswith("weakly") and not args.B:
        print("error: weakly dynamic variants require --B", file=sys.stderr)
        return 2
    if args.sweep:
        lo, hi, num = args.sweep
        c0s = np.unique(np.round(np.logspace(math.log10(lo), math.log10(hi),
                                             int(num))).astype(int))
        rows = sweep_d_ell(variant, c0s, args.n, args.eps1, args.eps2, B=B)
        print("c0,d_ell,d_z,d_delta,ell,Z,delta")
        for r in rows:
            print(f"{r['c0']},{r['d_ell']:.6f},{r['d_z']:.6f},"
                  f"{r['d_delta']:.6f},{r['ell']},{r['Z']:.3f},"
                  f"{r['delta']:.6e}")
        if args.json:
            doc = {"provenance": _provenance(_jsonable(_args_dict(args))),
                   "rows": rows}
            Path(args.json).write_text(json.dumps(_jsonable(doc), indent=2))
        return 0

    eps1 = args.eps1
    if variant == "universal":
        # single-entry view: optimize the ladder entry at c0 with the default
        # per-size budget allocation
        eps1 = 6.0 * args.eps1 / (math.pi ** 2 * args.c0 ** 2)
        inst = ProblemInstance(n=int(args.n), eps1=eps1, eps2=args.eps2,
                               c0=args.c0, variant="dynamic")
        tc = optimize_constants(inst, "dynamic")
    else:
        inst = ProblemInstance(n=int(args.n), eps1=eps1, eps2=args.eps2,
                               c0=args.c0, B=B, variant=variant)
        tc = optimize_constants(inst)
    params = derive_scheme_params(inst, tc)
    _print_params_table(inst, tc, params, f"variant {args.variant}")
    if variant == "weakly-dynamic-A":
        bound = weakly_dynamic_A_total_bound(params.ell, B, args.c0)
        print(f"variant-A total broadcast bound: ell + B*c0 = {bound}")
    if args.json:
        doc = {"provenance": _provenance(_jsonable(_args_dict(args))),
               "instance": to_dict(inst), "constants": to_dict(tc),
               "parameters": to_dict(params)}
        Path(args.json).write_text(json.dumps(_jsonable(doc), indent=2))
        print(f"wrote {args.json}")
    return 0


def cmd_ladder(args) -> int:
    ladder = build_universal_ladder(int(args.n), args.eps1, args.eps2,
                                    c_max=args.c_max, grid=args.grid,
                                    ratio=args.ratio)
    print("c,eps1_c,eta_c,d_ell,d_z,d_delta,ell,Z,delta")
    for e in ladder.entries:
        print(f"{e.c},{e.eps1_c:.6e},{e.eta_c:.6f},{e.constants.d_ell:.4f},"
              f"{e.constants.d_z:.4f},{e.constants.d_delta:.4f},{e.ell},"
              f"{e.Z:.2f},{e.delta:.6e}")
    if args.json:
        doc = {"provenance": _provenance(_jsonable(_args_dict(args))),
               "ladder": to_dict(ladder)}
        Path(args.json).write_text(json.dumps(_jsonable(doc), indent=2))
        print(f"wrote {args.json}")
    return 0


def cmd_generate(args) -> int:
    cb = CodeBook.generate(seed=args.seed, n=int(args.n), ell=int(args.ell),
                           delta=args.delta)
    write_codebook(cb, args.out)
    print(f"wrote {args.out}: n={cb.n} ell={cb.ell} seed={cb.seed} "
          f"delta={cb.delta_used:g}")
    return 0


def cmd_trace(args) -> int:
    from .tracers import (run_dynamic, run_universal, run_weakly_dynamic_A,
                          run_weakly_dynamic_B)
    variant = _VARIANT_FLAGS[args.variant]
    coalition_ids = list(range(args.c))
    coalition = Coalition(coalition_ids, args.strategy, args.seed)
    if variant == "universal":
        ladder = build_universal_ladder(int(args.n), args.eps1, args.eps2,
                                        c_max=args.c_max or args.c0)
        code = StreamingCode(seed=args.seed, n=args.c, delta_used=0.0,
                             user_ids=np.arange(args.c, dtype=np.int64))
        tr = run_universal(ladder, code, coalition, record_positions=True)
    else:
        B = args.B or 0
        inst = ProblemInstance(n=int(args.n), eps1=args.eps1, eps2=args.eps2,
                               c0=args.c0, B=B, variant=variant)
        params = derive_scheme_params(inst, optimize_constants(inst))
        code = StreamingCode(seed=args.seed, n=args.c,
                             delta_used=params.delta,
                             user_ids=np.arange(args.c, dtype=np.int64))
        if variant == "dynamic":
            tr = run_dynamic(params, code, coalition, record_positions=True)
        elif variant == "weakly-dynamic-A":
            tr = run_weakly_dynamic_A(params, code, coalition, B,
                                      record_positions=True)
        elif variant == "weakly-dynamic-B":
            tr = run_weakly_dynamic_B(params, code, coalition, B,
                                      record_positions=True)
        else:
            print("error: use `simulate` for static runs", file=sys.stderr)
            return 2
    print(json.dumps(tr.summary_dict(), indent=2))
    if args.events:
        tr.write_events_csv(args.events)
        print(f"wrote {args.events}")
    if args.json:
        tr.write_json(args.json)
        print(f"wrote {args.json}")
    return 0


def cmd_simulate(args) -> int:
    try:
        cfg = ExperimentConfig.from_json(args.config)
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as e:
        print(f"error: cannot load config: {e}", file=sys.stderr)
        return 2
    if args.trials:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    errs = cfg.validation_errors()
    if errs:
        for e in errs:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    out = _out_dir(args)
    stem = args.name or Path(args.config).stem
    derived = derive_experiment(cfg)
    stats = run_trials(cfg, derived)
    rows = summarize(stats)
    export_summary_json(stats, out / f"{stem}-summary.json")
    export_summary_csv(rows, out / f"{stem}-summary.csv", cfg)
    print(f"wrote {out / (stem + '-summary.json')}")
    print(f"wrote {out / (stem + '-summary.csv')}")
    if args.trajectories:
        t_rows = trajectory_rows(cfg, derived)
        export_trajectories_csv(t_rows, out / f"{stem}-trajectories.csv", cfg)
        print(f"wrote {out / (stem + '-trajectories.csv')}")
    agg = stats.aggregates()
    print(json.dumps(agg, indent=2))
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        doc = load_summary_json(path)
        rows.append(doc["summary"])
    cols = ["scheme", "strategy", "c", "c0", "n", "ell_theoretical",
            "median_catch", "p95_catch", "fp_rate", "trials"]
    print(",".join(cols))
    for r in rows:
        print(",".join(str(r.get(c, "")) for c in cols))
    if args.csv:
        export_summary_csv(rows, args.csv)
        print(f"wrote {args.csv}")
    return 0


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def _add_instance_flags(p, with_c0=True):
    p.add_argument("--n", type=float, required=True, help="number of users")
    p.add_argument("--eps1", type=float, required=True,
                   help="soundness error budget")
    p.add_argument("--eps2", type=float, required=True,
                   help="completeness error budget")
    if with_c0:
        p.add_argument("--c0", type=int, required=True,
                       help="coalition bound")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tardos",
        description="Tardos traitor tracing: optimize, generate, trace, "
                    "simulate.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="optimize tuning constants")
    p.add_argument("--variant", choices=sorted(_VARIANT_FLAGS), required=True)
    _add_instance_flags(p)
    p.add_argument("--B", type=int, default=0, help="feedback delay")
    p.add_argument("--sweep", type=float, nargs=3,
                   metavar=("C0_MIN", "C0_MAX", "POINTS"),
                   help="emit d_ell curve over a log-spaced c0 range")
    p.add_argument("--json", help="write results to this JSON file")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("ladder", help="build a universal ladder")
    _add_instance_flags(p, with_c0=False)
    p.add_argument("--c-max", type=int, required=True)
    p.add_argument("--grid", choices=("auto", "full", "geometric"),
                   default="auto")
    p.add_argument("--ratio", type=int, default=2)
    p.add_argument("--json", help="write the ladder to this JSON file")
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("generate", help="generate and persist a codebook")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--ell", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("trace", help="run one trace and dump the transcript")
    p.add_argument("--variant", choices=sorted(_VARIANT_FLAGS), required=True)
    _add_instance_flags(p)
    p.add_argument("--B", type=int, default=0)
    p.add_argument("--c", type=int, required=True, help="actual coalition size")
    p.add_argument("--c-max", type=int, help="universal ladder top size")
    p.add_argument("--strategy", choices=STRATEGIES, default="interleaving")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--events", help="write the event CSV here")
    p.add_argument("--json", help="write the JSON summary here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--trials", type=int, help="override trial count")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--name", help="output file stem")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--trajectories", action="store_true",
                   help="also export first-trial trajectories")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="tabulate summary JSONs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
