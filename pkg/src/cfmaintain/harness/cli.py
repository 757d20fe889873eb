"""Command line entry point: ``cfmaintain {run,ablation,runtime,plot-data,all}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, ExperimentConfig, load_config
from .io import emit_plot_series, read_csv, write_artifacts
from .runner import (DEFAULT_LAMBDAS, RunArtifacts, measure_runtime, run_ablation,
                     run_experiment, summarize)

logger = logging.getLogger("cfmaintain")


def _base_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    return cfg.replace(**overrides) if overrides else cfg


def _fmt(v, digits=3):
    return "-" if v is None else f"{v:.{digits}f}"


def _print_final(rows) -> None:
    print(f"{'stream':<11}{'model':<6}{'method':<12}{'validity':>14}{'knn':>14}"
          f"{'kde':>15}{'l2':>14}")
    for r in summarize(rows):
        cells = [f"{_fmt(r[m + '_mean'], 2)}±{_fmt(r[m + '_std'], 2)}"
                 for m in ("validity", "knn", "kde", "l2")]
        print(f"{r['stream']:<11}{r['model']:<6}{r['method']:<12}"
              f"{cells[0]:>14}{cells[1]:>14}{cells[2]:>15}{cells[3]:>14}")


def _print_runtime(rows) -> None:
    groups = {}
    for r in rows:
        groups.setdefault((r["stream"], r["model"], r["method"], r["schedule"]), []).append(
            r["seconds"])
    for (stream, model, method, schedule), secs in groups.items():
        mean = sum(secs) / len(secs)
        print(f"{stream:<11}{model:<6}{method:<12}{schedule:<16}{mean:8.3f} s")


def _print_ablation(rows) -> None:
    print(f"{'lambda_u':>8} | {'P val':>6} {'P knn':>6} {'P L2':>6} | "
          f"{'VP val':>6} {'VP knn':>6} {'VP L2':>6}")
    for r in rows:
        print(f"{r['lambda_u']:>8g} | {_fmt(r['p_validity'])} {_fmt(r['p_knn'])} "
              f"{_fmt(r['p_l2'])} | {_fmt(r['vp_validity'])} {_fmt(r['vp_knn'])} "
              f"{_fmt(r['vp_l2'])}")


def cmd_run(args) -> int:
    cfg = _base_config(args)
    art = run_experiment(cfg)
    write_artifacts(art, args.out)
    emit_plot_series(art.checkpoints, Path(args.out) / "plots", svg=args.svg)
    _print_final(art.final)
    return 0


def cmd_ablation(args) -> int:
    cfg = _base_config(args)
    lambdas = [float(v) for v in args.lambdas.split(",")] if args.lambdas else DEFAULT_LAMBDAS
    art = run_ablation(cfg, lambdas)
    write_artifacts(art, args.out)
    _print_ablation(art.ablation)
    return 0


def cmd_runtime(args) -> int:
    cfg = _base_config(args)
    art = measure_runtime(cfg)
    write_artifacts(art, args.out)
    _print_runtime(art.runtime)
    return 0


def cmd_plot_data(args) -> int:
    source = Path(args.source) / "checkpoints.csv"
    if not source.exists():
        raise FileNotFoundError(f"{source} not found (run `cfmaintain run` first)")
    paths = emit_plot_series(read_csv(source), args.out, svg=args.svg)
    for p in paths:
        print(p)
    return 0


def cmd_all(args) -> int:
    """Quality for every stream and model, runtime, the ablation and both validity series."""
    base = _base_config(args)
    out = Path(args.out)
    quality = RunArtifacts()
    for stream in ("hyperplane", "sine", "sea"):
        for model in ("lr", "ht"):
            cfg = base.replace(stream_kind=stream, model_kind=model, n_features=None,
                               stream_params={}, model_params={}, generator="robx")
            quality.extend(run_experiment(cfg))
    write_artifacts(quality, out / "final_quality")
    emit_plot_series(quality.checkpoints, out / "final_quality" / "plots", svg=args.svg)
    _print_final(quality.final)

    gs_sea = run_experiment(base.replace(stream_kind="sea", model_kind="ht", n_features=None,
                                         stream_params={}, model_params={}, generator="gs",
                                         methods=("frozen", "ours-p", "ours-vp")))
    write_artifacts(gs_sea, out / "validity_sea_ht_gs")
    emit_plot_series(gs_sea.checkpoints, out / "validity_sea_ht_gs" / "plots", svg=args.svg)

    runtime = RunArtifacts()
    for stream in ("hyperplane", "sea"):
        runtime.extend(measure_runtime(base.replace(stream_kind=stream, model_kind="ht",
                                                    n_features=None, stream_params={},
                                                    model_params={}, generator="robx")))
    write_artifacts(runtime, out / "runtime")
    _print_runtime(runtime.runtime)

    ablation = run_ablation(base, DEFAULT_LAMBDAS)
    write_artifacts(ablation, out / "ablation")
    _print_ablation(ablation.ablation)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfmaintain",
        description="Counterfactual explanation maintenance under concept drift.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", metavar="PATH",
                       help="flat key = value experiment config" +
                       ("" if needs_config else " (optional base)"))
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--repeats", type=int, help="number of repeats (overrides config)")
        p.add_argument("--out", default="results", metavar="DIR")

    p = sub.add_parser("run", help="run one experiment config")
    common(p)
    p.add_argument("--svg", action="store_true", help="also render SVG validity plots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablation", help="sweep lambda_u over 3 streams x 2 classifiers")
    common(p)
    p.add_argument("--lambdas", help="comma separated lambda_u grid (default 1,2,3,4,5,10)")
    p.set_defaults(func=cmd_ablation)

    p = sub.add_parser("runtime", help="time maintenance against regeneration")
    common(p)
    p.set_defaults(func=cmd_runtime)

    p = sub.add_parser("plot-data", help="validity-over-time series from a run directory")
    p.add_argument("--from", dest="source", required=True, metavar="DIR")
    p.add_argument("--out", default="plots", metavar="DIR")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("all", help="every experiment in one go")
    common(p, needs_config=False)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_all)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"cfmaintain: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
