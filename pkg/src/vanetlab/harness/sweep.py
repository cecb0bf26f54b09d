"""Node-count sweeps, aggregation and plot tables."""
from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional

from ..errors import InvalidConfigError, SweepError
from .experiment import ExperimentConfig, model_name, run_experiment
from .metrics import METRIC_NAMES, MetricsReport

NA = "NA"
REPORT_FIELDS = [f.name for f in fields(MetricsReport)]
CSV_HEADER = ["model", "n_vehicles", "seed"] + REPORT_FIELDS
FLOAT_FIELDS = {"throughput", "mean_delay", "delivery_ratio"}


@dataclass
class SweepResult:
    rows: list  # (model, n_vehicles, seed, MetricsReport), sorted
    aggregates: dict = field(default_factory=dict)  # (model, n) -> {metric: (mean, sd)}

    @property
    def models(self):
        return sorted({r[0] for r in self.rows})

    @property
    def node_counts(self):
        return sorted({r[1] for r in self.rows})


def _mean_sd(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return statistics.fmean(vals), sd


def aggregate(rows) -> dict:
    groups = {}
    for model, n, _seed, rep in rows:
        groups.setdefault((model, n), []).append(rep)
    out = {}
    for key in sorted(groups):
        reps = groups[key]
        out[key] = {m: _mean_sd([getattr(r, m) for r in reps]) for m in METRIC_NAMES}
    return out


def _run_one(args):
    model, n, seed, cfg = args
    try:
        return (model, n, seed, run_experiment(model, n, seed, cfg)), None
    except Exception as exc:  # reported with its triple by the caller
        return (model, n, seed, None), exc


def sweep(models, n_vehicles_list, seeds, cfg: ExperimentConfig = ExperimentConfig(),
          workers: int = 1, progress=None) -> SweepResult:
    models = sorted({model_name(m) for m in models})
    n_list = sorted(set(n_vehicles_list))
    seeds = sorted(set(seeds))
    if not models or not n_list or not seeds:
        raise InvalidConfigError("sweep needs at least one model, node count and seed")
    jobs = [(m, n, s, cfg) for m in models for n in n_list for s in seeds]
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_one, jobs)
            for (row, exc), job in zip(results, jobs):
                if exc is not None:
                    raise SweepError(job[0], job[1], job[2], exc) from exc
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for job in jobs:
            row, exc = _run_one(job)
            if exc is not None:
                raise SweepError(job[0], job[1], job[2], exc) from exc
            rows.append(row)
            if progress:
                progress(row)
    rows.sort(key=lambda r: r[:3])
    return SweepResult(rows, aggregate(rows))


def fmt(v) -> str:
    if v is None:
        return NA
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def report_csv(rep: MetricsReport, prefix=(), prefix_header=()) -> str:
    return _write_csv(list(prefix_header) + REPORT_FIELDS,
                      [list(prefix) + [getattr(rep, f) for f in REPORT_FIELDS]])


def sweep_to_csv(sr: SweepResult) -> str:
    return _write_csv(CSV_HEADER, [[m, n, s] + [getattr(rep, f) for f in REPORT_FIELDS]
                                   for m, n, s, rep in sr.rows])


def _parse(v, kind):
    if v == NA:
        return None
    return kind(v)


def sweep_from_csv(text: str) -> SweepResult:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise InvalidConfigError("not a sweep CSV (unexpected header)")
    kinds = {f: (float if f in FLOAT_FIELDS else int) for f in REPORT_FIELDS}
    rows = []
    for rec in reader:
        if not rec:
            continue
        vals = dict(zip(header, rec))
        rep = MetricsReport(**{f: _parse(vals[f], kinds[f]) for f in REPORT_FIELDS})
        rows.append((vals["model"], int(vals["n_vehicles"]), int(vals["seed"]), rep))
    rows.sort(key=lambda r: r[:3])
    return SweepResult(rows, aggregate(rows))


def emit_plot_data(sr: SweepResult, metrics=("throughput", "mean_delay", "overhead")) -> dict:
    """One table per metric: n_vehicles, then mean and sd columns per model."""
    models = sr.models
    header = ["n_vehicles"] + [f"{m}_{s}" for m in models for s in ("mean", "sd")]
    out = {}
    for metric in metrics:
        rows = []
        for n in sr.node_counts:
            row = [n]
            for m in models:
                agg = sr.aggregates.get((m, n))
                row += list(agg[metric]) if agg else [None, None]
            rows.append(row)
        out[metric] = _write_csv(header, rows)
    return out


def plot_table_values(table: str) -> list:
    """Parse a plot table back into rows of floats (None for NA)."""
    reader = csv.reader(io.StringIO(table))
    next(reader)
    return [[None if v == NA else float(v) for v in row] for row in reader if row]


def aggregate_value(sr: SweepResult, model: str, n: int, metric: str) -> Optional[float]:
    return sr.aggregates[(model, n)][metric][0]
