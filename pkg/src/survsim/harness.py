"""Experiment matrix: fan out runs, collect per-run metrics, aggregate over seeds.

runs.csv columns (one row per run, sorted by cell key):
    technique, model, rate, seed, area, SA1..SAk, RF1..RFk, CD, CRF, produced1..producedk
aggregates.csv columns (one row per technique/model/rate/area):
    technique, model, rate, area, n, CD_mean, CD_std, CRF_mean, CRF_std
Floats are written with repr() so that every value parses back exactly.
Standard deviations are sample deviations (ddof=1), nan for a single seed.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .config import ExperimentConfig, ScenarioConfig
from .engine import SimulationRun, run
from .metrics import MetricsReport, compute_report
from .scenario import Scenario, generate_scenario

log = logging.getLogger(__name__)

KEY_FIELDS = ("technique", "model", "rate", "seed", "area")
AGG_FIELDS = ("technique", "model", "rate", "area", "n", "CD_mean", "CD_std", "CRF_mean", "CRF_std")


class MatrixError(RuntimeError):
    """One or more runs of the matrix failed."""

    def __init__(self, failures: list[tuple[Cell, str]]):
        self.failures = failures
        lines = [f"{c.technique}/m{c.model}/p{c.rate}/s{c.seed}/{c.area}: {err}" for c, err in failures]
        super().__init__(f"{len(failures)} run(s) failed:\n" + "\n".join(lines))


@dataclass(frozen=True, order=True)
class Cell:
    technique: str
    model: int
    rate: float
    seed: int
    area: str


@dataclass(frozen=True)
class AggregateRow:
    technique: str
    model: int
    rate: float
    area: str
    n: int
    cd_mean: float
    cd_std: float
    crf_mean: float
    crf_std: float


def run_fields(n_types: int) -> tuple[str, ...]:
    return (KEY_FIELDS
            + tuple(f"SA{s}" for s in range(1, n_types + 1))
            + tuple(f"RF{s}" for s in range(1, n_types + 1))
            + ("CD", "CRF")
            + tuple(f"produced{s}" for s in range(1, n_types + 1)))


def cells(config: ExperimentConfig) -> list[Cell]:
    return sorted(Cell(t, m, r, s, a)
                  for a in config.area_names for t in config.techniques
                  for m in config.models for r in config.rates for s in config.seeds)


@lru_cache(maxsize=16)
def _scenario(cfg: ScenarioConfig, seed: int) -> Scenario:
    # paired seeding: every technique/model/rate of a seed sees this scenario
    return generate_scenario(cfg, seed)


def run_cell(config: ExperimentConfig, cell: Cell) -> dict:
    scen = _scenario(config.scenario_config(cell.area), cell.seed)
    sim = SimulationRun(scen, cell.technique, cell.model, cell.rate, cell.seed,
                        timing=config.timing, radio=config.radio, protocol=config.protocol)
    return report_row(cell, compute_report(run(sim), config.protocol.surv_requirements))


def report_row(cell: Cell, report: MetricsReport) -> dict:
    """Flatten one run's metrics into a runs.csv row."""
    row = {"technique": cell.technique, "model": cell.model, "rate": cell.rate,
           "seed": cell.seed, "area": cell.area}
    types = sorted(report.sa)
    row.update({f"SA{s}": report.sa[s] for s in types})
    row.update({f"RF{s}": report.rf[s] for s in types})
    row["CD"], row["CRF"] = report.cd, report.crf
    row.update({f"produced{s}": report.produced.get(s, 0) for s in types})
    return row


def _run_safe(args: tuple[ExperimentConfig, Cell]) -> tuple[Cell, dict | None, str | None, float]:
    config, cell = args
    start = time.perf_counter()
    try:
        row, err = run_cell(config, cell), None
    except Exception as exc:  # reported per cell, the sweep keeps going
        log.exception("run %s failed", cell)
        row, err = None, f"{type(exc).__name__}: {exc}"
    return cell, row, err, time.perf_counter() - start


def _cost(cell: Cell) -> tuple:
    # longest first keeps the worker pool busy until the end
    heavy = {"brclfl": 0, "brcbr": 1}.get(cell.technique, 2)
    return (cell.area != "small", heavy, cell.rate, cell)


def run_matrix(config: ExperimentConfig, workers: int = 1, out_dir: str | os.PathLike | None = None,
               cell_list: Sequence[Cell] | None = None,
               timings: dict | None = None) -> tuple[list[dict], list[AggregateRow]]:
    """Execute every cell; write runs.csv and aggregates.csv when ``out_dir`` is given.

    If ``timings`` is a dict it receives the wall time of each run, keyed by cell.

    Raises MatrixError (after writing the successful rows) if any run failed.
    """
    todo = sorted(cell_list if cell_list is not None else cells(config), key=_cost)
    results, failures = [], []
    jobs = [(config, c) for c in todo]
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        outcomes = pool.map(_run_safe, jobs) if pool else map(_run_safe, jobs)
        for cell, row, err, elapsed in outcomes:
            if timings is not None:
                timings[cell] = elapsed
            if err is None:
                results.append(row)
            else:
                failures.append((cell, err))
    finally:
        if pool:
            pool.shutdown()
    rows = sort_rows(results)
    aggs = aggregate(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        n_types = len(config.protocol.surv_requirements)
        write_runs(rows, out / "runs.csv", n_types)
        write_aggregates(aggs, out / "aggregates.csv")
    if failures:
        raise MatrixError(sorted(failures))
    return rows, aggs


def sort_rows(rows: Iterable[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: (r["technique"], int(r["model"]), float(r["rate"]),
                                       int(r["seed"]), r["area"]))


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_runs(rows: Iterable[dict], path: str | os.PathLike, n_types: int = 3) -> None:
    fields = run_fields(n_types)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in sort_rows(rows):
            w.writerow([_fmt(row[f]) for f in fields])


def read_runs(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        rows = []
        for raw in csv.DictReader(fh):
            row = {}
            for k, v in raw.items():
                if k in ("technique", "area"):
                    row[k] = v
                elif k in ("model", "seed") or k.startswith("produced"):
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


def aggregate(rows: Iterable[dict]) -> list[AggregateRow]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["technique"], int(row["model"]), float(row["rate"]), row["area"])
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        g = groups[key]
        cd = [float(r["CD"]) for r in g]
        crf = [float(r["CRF"]) for r in g]
        out.append(AggregateRow(*key, len(g), statistics.fmean(cd), _std(cd),
                                statistics.fmean(crf), _std(crf)))
    return out


def _std(xs: list[float]) -> float:
    return statistics.stdev(xs) if len(xs) > 1 else math.nan


def write_aggregates(aggs: Iterable[AggregateRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_FIELDS)
        for a in aggs:
            w.writerow([a.technique, a.model, repr(a.rate), a.area, a.n, repr(a.cd_mean),
                        repr(a.cd_std), repr(a.crf_mean), repr(a.crf_std)])


def read_aggregates(path: str | os.PathLike) -> list[AggregateRow]:
    with open(path, newline="") as fh:
        return [AggregateRow(r["technique"], int(r["model"]), float(r["rate"]), r["area"],
                             int(r["n"]), float(r["CD_mean"]), float(r["CD_std"]),
                             float(r["CRF_mean"]), float(r["CRF_std"]))
                for r in csv.DictReader(fh)]
