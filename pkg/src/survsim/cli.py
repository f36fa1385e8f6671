"""Command line entry point: ``survsim simulate | matrix | plot``."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path

from .config import AREAS, CONFIG_ENV_VAR, MODELS, TECHNIQUES, ConfigError, load_config
from .engine import SimulationRun, run
from .harness import Cell, MatrixError, read_aggregates, report_row, run_matrix, write_runs
from .metrics import compute_report
from .plots import emit_plots
from .scenario import generate_scenario


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="survsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    cfg_help = f"JSON config file (default: ${CONFIG_ENV_VAR}, then built-in defaults)"

    s = sub.add_parser("simulate", help="run a single mission and print its metrics")
    s.add_argument("--technique", choices=TECHNIQUES, default="br")
    s.add_argument("--model", type=int, choices=MODELS, default=1)
    s.add_argument("--rate", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--area", choices=AREAS, default="large")
    s.add_argument("--config", help=cfg_help)
    s.add_argument("--trace", metavar="PATH", help="write the movement trace (t robot x y) here")
    s.add_argument("--events", metavar="PATH", help="write the transmission event log here")
    s.add_argument("--out", metavar="PATH", help="also write the run as a one-row runs.csv")

    m = sub.add_parser("matrix", help="run the full experiment matrix")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", help="output directory (default: config output_dir)")
    m.add_argument("--config", help=cfg_help)
    m.add_argument("--no-plots", action="store_true", help="skip SVG charts")

    g = sub.add_parser("plot", help="render SVG charts from aggregates.csv")
    g.add_argument("--in", dest="src", required=True, help="aggregates.csv or a directory holding it")
    g.add_argument("--out", required=True, help="directory for the SVG files")
    return p


def _simulate(args) -> int:
    config = load_config(args.config)
    if args.area not in config.areas:
        raise ConfigError(f"unknown area preset {args.area!r}")
    scen = generate_scenario(config.scenario_config(args.area), args.seed)
    with contextlib.ExitStack() as stack:
        trace = stack.enter_context(open(args.trace, "w")) if args.trace else None
        events = stack.enter_context(open(args.events, "w")) if args.events else None
        sim = SimulationRun(scen, args.technique, args.model, args.rate, args.seed,
                            timing=config.timing, radio=config.radio, protocol=config.protocol,
                            event_log=events, movement_trace=trace)
        history = run(sim)
    report = compute_report(history, config.protocol.surv_requirements)
    for s in sorted(report.sa):
        print(f"type {s}: produced={report.produced.get(s, 0)} SA={report.sa[s]:.4f} RF={report.rf[s]:.4f}")
    print(f"CD={report.cd:.4f} CRF={report.crf:.4f} transmissions={history.transmissions} "
          f"alive={len(history.alive)}")
    if args.out:
        cell = Cell(args.technique, args.model, args.rate, args.seed, args.area)
        write_runs([report_row(cell, report)], args.out, len(config.protocol.surv_requirements))
    return 0


def _matrix(args) -> int:
    config = load_config(args.config)
    out = Path(args.out or config.output_dir)
    try:
        _, aggs = run_matrix(config, workers=args.workers, out_dir=out)
    except MatrixError as exc:
        print(exc, file=sys.stderr)
        return 1
    print(f"wrote {out / 'runs.csv'} and {out / 'aggregates.csv'}")
    if not args.no_plots and aggs:
        files = emit_plots(aggs, out / "plots")
        print(f"wrote {len(files)} charts to {out / 'plots'}")
    return 0


def _plot(args) -> int:
    src = Path(args.src)
    if src.is_dir():
        src = src / "aggregates.csv"
    files = emit_plots(read_aggregates(src), args.out)
    for f in files:
        print(f)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"simulate": _simulate, "matrix": _matrix, "plot": _plot}[args.command]
    try:
        return handler(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"survsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
