"""Command-line interface: ``mlgom simulate | estimate | select-k | experiment | plot``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bundle import read_bundle, write_bundle
from .errors import MLGoMError
from .estimators import METHODS, EstimationResult, estimate
from .experiment import PRESETS, load_config, preset, read_results_csv, run_experiment
from .metrics import max_row_l1_error, relative_l1_error, relative_l2_error
from .model import generate_experiment_instance
from .plots import emit_plots
from .selection import select_num_classes

log = logging.getLogger("mlgom")


def result_to_dict(res: EstimationResult) -> dict:
    d = res.diagnostics
    return {
        "method": res.method,
        "K": res.K,
        "Pi_hat": res.Pi_hat.tolist(),
        "Theta_hat": res.Theta_hat.tolist(),
        "vertices": [int(v) for v in res.vertices],
        "diagnostics": {
            "vertex_condition": d.vertex_condition,
            "rows_clipped": d.rows_clipped,
            "rows_rescued": d.rows_rescued,
            "rank_deficient": d.rank_deficient,
        },
    }


def _write_json(obj, out):
    text = json.dumps(obj, indent=1) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _config_from_args(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise MLGoMError("one of --preset or --config is required")
    methods = tuple(args.methods.split(",")) if getattr(args, "methods", None) else None
    return cfg.replace(
        reps=getattr(args, "reps", None), seed_base=args.seed,
        kc=getattr(args, "kc", None), methods=methods,
    )


def cmd_simulate(args):
    cfg = _config_from_args(args)
    value = cfg.values[0] if args.point is None else _coerce(args.point, cfg.values)
    inst = cfg.instance(value)
    params, R = generate_experiment_instance(inst, args.rep)
    path = write_bundle(
        args.out, R, params,
        experiment=cfg.experiment, point_param=cfg.param, point_value=value,
        rep=args.rep, seed=inst.seed_base + args.rep, N0=inst.N0,
    )
    print(f"wrote bundle {path} (N={R.N}, J={R.J}, L={R.L}, M={R.M}, K={params.K})")


def _coerce(text: str, grid: list):
    v = float(text)
    for g in grid:
        if float(g) == v:
            return g
    return int(v) if v.is_integer() else v


def cmd_estimate(args):
    R, truth, _ = read_bundle(args.bundle)
    K = args.k if args.k is not None else (truth.K if truth is not None else None)
    if K is None:
        raise MLGoMError("--k is required when the bundle carries no true parameters")
    res = estimate(R, K, args.method, clip=R.M if args.clip else None)
    out = result_to_dict(res)
    if truth is not None and truth.K == K:
        out["metrics"] = {
            "rel_l1": relative_l1_error(res.Pi_hat, truth.Pi),
            "rel_l2": relative_l2_error(res.Theta_hat, truth.Theta),
            "max_row_l1": max_row_l1_error(res.Pi_hat, truth.Pi),
        }
    _write_json(out, args.out)


def cmd_select_k(args):
    R, truth, _ = read_bundle(args.bundle)
    rep = select_num_classes(R, args.kc, args.method)
    out = {
        "method": rep.method,
        "per_k": {str(k): v for k, v in rep.per_k.items()},
        "selected_k": rep.selected_k,
        "q_at_selected": rep.q_at_selected,
        "per_layer_eta": rep.per_layer_eta,
        "failed": {str(k): v for k, v in rep.failed.items()},
    }
    if truth is not None:
        out["k_true"] = truth.K
    _write_json(out, args.out)


def cmd_experiment(args):
    cfg = _config_from_args(args)
    res = run_experiment(cfg, args.out, threads=args.threads, timing=not args.no_timing, progress=True)
    print(f"wrote {len(res)} rows to {Path(args.out) / 'results.csv'}")
    if args.plots:
        for p in emit_plots(res, Path(args.out) / "plots"):
            print(f"wrote {p}")
    for s in res.summary():
        print(f"{cfg.param}={s['point_value']!s:>6} {s['method']:>5}  rel_l1={s['rel_l1']:.4f}  "
              f"rel_l2={s['rel_l2']:.4f}  accuracy={s['accuracy']:.2f}")


def cmd_plot(args):
    res = read_results_csv(args.results)
    for p in emit_plots(res, args.out):
        print(f"wrote {p}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlgom", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--config", help="JSON experiment config (may name a base preset)")
        p.add_argument("--seed", type=int, help="seed base; replication r uses seed + r")

    p = sub.add_parser("simulate", help="simulate one dataset bundle from a preset or config")
    add_config(p)
    p.add_argument("--point", help="grid value of the swept parameter (default: first)")
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--out", required=True, help="bundle directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate memberships and item parameters")
    p.add_argument("--bundle", required=True)
    p.add_argument("--method", choices=METHODS, default="dsog")
    p.add_argument("--k", type=int, help="number of classes (default: true K from the bundle)")
    p.add_argument("--clip", action="store_true", help="clip item parameters to [0, M]")
    p.add_argument("--out", help="output JSON (default: stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select-k", help="choose K by averaged fuzzy modularity")
    p.add_argument("--bundle", required=True)
    p.add_argument("--method", choices=METHODS, default="dsog")
    p.add_argument("--kc", type=int, default=8, help="largest candidate K")
    p.add_argument("--out", help="output JSON (default: stdout)")
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    add_config(p)
    p.add_argument("--reps", type=int)
    p.add_argument("--methods", help="comma-separated subset of dsog,sog,sum")
    p.add_argument("--kc", type=int, help="largest candidate K; 0 skips K selection")
    p.add_argument("--threads", type=int, help="worker threads (default: MLGOM_THREADS or CPU count)")
    p.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for byte-reproducible CSVs")
    p.add_argument("--plots", action="store_true", help="also write SVG charts to OUT/plots")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot", help="draw SVG charts from a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (MLGoMError, OSError) as exc:
        print(f"mlgom: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
