"""Experiment orchestration: the method x target x seed matrix, sweeps and reports.

Run artifacts land under ``<output_dir>/runs/<method>/<target>/seed<seed>/``:
``performance_matrix.csv``, ``metrics.json``, ``rounds.jsonl`` and
``status.json``. Aggregates and summaries are written next to ``runs/``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import traceback
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from .config import ExperimentConfig, config_from_dict, dump_config, set_param
from .data.ingest import CsvSchema, RawSeries, ingest_dir
from .data.pipeline import TaskData, prepare_tasks
from .data.schedule import build_schedule
from .data.synth import synth_generate
from .errors import ConfigError
from .evaluation import (
    MetricsReport,
    PerformanceMatrix,
    TrialAggregate,
    aggregate_trials,
    write_metrics_json,
)
from .federation import TrainSettings, run_experiment
from .lstm import LstmSpec
from .methods.strategies import make_strategy

logger = logging.getLogger(__name__)

ENV_OUTPUT_DIR = "FEDCONTINUAL_OUTPUT_DIR"
ENV_THREADS = "FEDCONTINUAL_THREADS"

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

AGGREGATE_FIELDS = ["method", "target", "n_trials",
                    "AF_mean", "AF_std", "AP_mean", "AP_std",
                    "AvgPerf_mean", "AvgPerf_std", "CPU_mean", "CPU_std"]


def apply_env(cfg: ExperimentConfig) -> ExperimentConfig:
    """Output-dir and thread-count overrides from the environment."""
    out = os.environ.get(ENV_OUTPUT_DIR)
    threads = os.environ.get(ENV_THREADS)
    if out:
        cfg.output_dir = out
    if threads:
        try:
            cfg.threads = max(1, int(threads))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", ENV_THREADS, threads)
    return cfg


def load_series(cfg: ExperimentConfig) -> list[RawSeries]:
    if cfg.data.source == "synthetic":
        return synth_generate(cfg.data.synthetic, cfg.data.synthetic_seed)
    return ingest_dir(cfg.data.csv_dir, CsvSchema())


def build_task_data(cfg: ExperimentConfig, target: str,
                    series: Sequence[RawSeries] | None = None) -> TaskData:
    series = load_series(cfg) if series is None else series
    first = min(s.timestamps[0] for s in series)
    last = max(s.timestamps[-1] for s in series) + pd.Timedelta(hours=1)
    schedule = build_schedule(cfg.schedule, data_span=(first, last))
    features = cfg.data.features or [c for c in series[0].numeric
                                      if not series[0].frame[c].isna().all()]
    return prepare_tasks(series, schedule, target, lag=cfg.model.lag, horizon=cfg.model.horizon,
                         features=features,
                         include_target_as_feature=cfg.data.include_target_as_feature,
                         include_season=cfg.data.include_season,
                         train_fraction=cfg.data.train_fraction)


def train_settings(cfg: ExperimentConfig) -> TrainSettings:
    t = cfg.training
    return TrainSettings(base_rounds=t.base_rounds, task_rounds=t.task_rounds,
                         local_epochs=t.local_epochs, batch_size=t.batch_size,
                         optimizer=t.opt_state(), threads=cfg.threads)


def model_spec(cfg: ExperimentConfig, data: TaskData) -> LstmSpec:
    m = cfg.model
    return LstmSpec(data.input_dim, m.hidden_dim, m.num_layers, m.horizon, m.lag)


def run_dir(out: Path, method: str, target: str, seed: int) -> Path:
    return out / "runs" / method / target / f"seed{seed}"


def run_single(cfg: ExperimentConfig, method: str, target: str, seed: int, data: TaskData,
               out: Path) -> MetricsReport:
    """One (method, target, seed) experiment with its artifacts written to ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    strategy = make_strategy(method, cfg.method_params(method, target))
    with open(out / "rounds.jsonl", "w", encoding="utf-8") as log:
        result = run_experiment(data, strategy, model_spec(cfg, data), train_settings(cfg), seed,
                                on_round=lambda r: log.write(r.to_json() + "\n"))
    result.P.write_csv(out / "performance_matrix.csv")
    report = MetricsReport.from_matrix(result.P, method, target, seed, result.cpu_seconds)
    write_metrics_json(out / "metrics.json", report)
    return report


def _write_status(path: Path, status: str, error: str | None = None) -> None:
    path.mkdir(parents=True, exist_ok=True)
    payload = {"status": status}
    if error is not None:
        payload["error"] = error
    (path / "status.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")


def run_matrix(cfg: ExperimentConfig, out: str | Path | None = None) -> int:
    """Every (method, target, seed) triple, then the aggregate report.

    A failing run is recorded in its ``status.json`` and the rest continue.
    Returns 0 when everything succeeded and 1 otherwise.
    """
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    series = load_series(cfg)
    failed = 0
    for target in cfg.targets:
        try:
            data = build_task_data(cfg, target, series)
        except Exception as exc:
            logger.error("data preparation for %s failed: %s", target, exc)
            for method in cfg.methods:
                for seed in cfg.seeds:
                    _write_status(run_dir(out, method, target, seed), "failed",
                                  f"data preparation: {exc}")
                    failed += 1
            continue
        for method in cfg.methods:
            done = []
            for seed in cfg.seeds:
                path = run_dir(out, method, target, seed)
                try:
                    report = run_single(cfg, method, target, seed, data, path)
                except Exception as exc:
                    failed += 1
                    logger.error("run %s/%s/seed%d failed: %s", method, target, seed, exc)
                    _write_status(path, "failed", "".join(
                        traceback.format_exception_only(type(exc), exc)).strip())
                    continue
                _write_status(path, "ok")
                done.append((path, report))
                logger.info("%s/%s/seed%d AF=%s AP=%s AvgPerf=%s", method, target, seed,
                            report.AF, report.AP, report.AvgPerf)
            # every completed run also carries its cell's trial aggregate
            if done:
                agg = aggregate_trials([r for _, r in done])
                for path, report in done:
                    write_metrics_json(path / "metrics.json", report, agg)
    emit_report(out, scale=cfg.report_scale,
                cells=[(m, t) for m in cfg.methods for t in cfg.targets])
    return EXIT_PARTIAL if failed else EXIT_OK


# reporting

def collect_runs(results: Path) -> tuple[list[tuple[MetricsReport, PerformanceMatrix]],
                                         list[str]]:
    """Completed runs and the relative paths of runs that failed or are incomplete."""
    done, missing = [], []
    runs = results / "runs"
    if not runs.is_dir():
        return done, missing
    for status_file in sorted(runs.glob("*/*/seed*/status.json")):
        d = status_file.parent
        rel = str(d.relative_to(results))
        status = json.loads(status_file.read_text(encoding="utf-8")).get("status")
        metrics, matrix = d / "metrics.json", d / "performance_matrix.csv"
        if status != "ok" or not metrics.exists() or not matrix.exists():
            missing.append(rel)
            continue
        m = json.loads(metrics.read_text(encoding="utf-8"))
        report = MetricsReport(m["method"], m["target"], int(m["seed"]), m["AF"], m["AP"],
                               m["AvgPerf"], float(m["cpu_seconds"]))
        done.append((report, PerformanceMatrix.read_csv(matrix)))
    done.sort(key=lambda rp: (rp[0].method, rp[0].target, rp[0].seed))
    return done, missing


def _scaled(v: float | None, factor: float) -> float | None:
    return None if v is None else v * factor


def _fmt(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "n/a"
    return f"{mean:.2f} ± {std:.2f}"


def aggregate_rows(reports: Sequence[MetricsReport], scale: float = 1.0,
                   cells: Sequence[tuple[str, str]] | None = None) -> list[dict]:
    """One row per (method, target) cell; AF/AP/AvgPerf multiplied by ``scale``."""
    by_cell: dict[tuple[str, str], list[MetricsReport]] = {}
    for r in reports:
        by_cell.setdefault((r.method, r.target), []).append(r)
    order = list(cells) if cells is not None else sorted(by_cell)
    rows = []
    for cell in order:
        if cell not in by_cell:
            continue
        agg: TrialAggregate = aggregate_trials(by_cell[cell])
        row: dict[str, Any] = {"method": cell[0], "target": cell[1], "n_trials": agg.n_trials}
        for name, key, factor in (("AF", "AF", scale), ("AP", "AP", scale),
                                  ("AvgPerf", "AvgPerf", scale), ("CPU", "cpu_seconds", 1.0)):
            row[f"{name}_mean"] = _scaled(agg.mean(key), factor)
            row[f"{name}_std"] = _scaled(agg.std(key), factor)
        rows.append(row)
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row.get(h)) for h in header])


def emit_report(results: str | Path, scale: float = 1000.0,
                cells: Sequence[tuple[str, str]] | None = None) -> dict:
    """Write ``aggregate.csv``, ``summary.txt``, ``p_long.csv`` and ``task_curves.csv``.

    Runs that failed or lack artifacts are listed in the summary, never filled in.
    """
    results = Path(results)
    results.mkdir(parents=True, exist_ok=True)
    done, missing = collect_runs(results)
    reports = [r for r, _ in done]
    rows = aggregate_rows(reports, scale, cells)
    _write_csv(results / "aggregate.csv", AGGREGATE_FIELDS, rows)

    long_rows = []
    for r, P in done:
        for i in range(P.N):
            for j in range(P.N):
                v = P.entries[i, j]
                long_rows.append({"method": r.method, "target": r.target, "seed": r.seed,
                                  "model_after_task": i + 1, "test_task": j + 1,
                                  "rmse": None if np.isnan(v) else float(v)})
    _write_csv(results / "p_long.csv",
               ["method", "target", "seed", "model_after_task", "test_task", "rmse"], long_rows)

    # diagonal RMSE per task: each task right after it was learned (Static: never)
    curve_rows = []
    diag: dict[tuple[str, str], list[np.ndarray]] = {}
    for r, P in done:
        diag.setdefault((r.method, r.target), []).append(P.diagonal())
    for (method, target), ds in sorted(diag.items()):
        arr = np.array(ds)
        mean = np.nanmean(arr, axis=0) if not np.all(np.isnan(arr)) else arr[0]
        for j, v in enumerate(mean):
            curve_rows.append({"method": method, "target": target, "task": j + 1,
                               "rmse_mean": None if np.isnan(v) else float(v),
                               "n_trials": len(ds)})
    _write_csv(results / "task_curves.csv",
               ["method", "target", "task", "rmse_mean", "n_trials"], curve_rows)

    lines = [f"{len(done)} runs completed, {len(missing)} failed or incomplete"]
    if not done:
        lines.append("0 runs")
    if rows:
        lines.append("")
        lines.append(f"AF, AP and AvgPerf are RMSE x {scale:g}; CPU in seconds per run")
        header = f"{'method':<8} {'target':<7} {'n':>3}  {'AF':>16} {'AP':>16} " \
                 f"{'AvgPerf':>16} {'CPU':>16}"
        lines.append(header)
        for row in rows:
            lines.append(
                f"{row['method']:<8} {row['target']:<7} {row['n_trials']:>3}  "
                f"{_fmt(row['AF_mean'], row['AF_std']):>16} "
                f"{_fmt(row['AP_mean'], row['AP_std']):>16} "
                f"{_fmt(row['AvgPerf_mean'], row['AvgPerf_std']):>16} "
                f"{_fmt(row['CPU_mean'], row['CPU_std']):>16}")
    pairs = {(m, t) for m, t in diag}
    compare = sorted(t for t in {t for _, t in pairs}
                     if ("Static", t) in pairs and ("Naive", t) in pairs)
    for t in compare:
        lines.append("")
        lines.append(f"Per-task RMSE x {scale:g} right after learning each task, {t}")
        s = np.nanmean(np.array(diag[("Static", t)]), axis=0) * scale
        n = np.nanmean(np.array(diag[("Naive", t)]), axis=0) * scale
        lines.append("task   " + " ".join(f"{j + 1:>8d}" for j in range(len(s))))
        lines.append("Static " + " ".join(f"{v:8.2f}" for v in s))
        lines.append("Naive  " + " ".join(f"{v:8.2f}" for v in n))
    if missing:
        lines.append("")
        lines.append("Missing or failed runs:")
        lines.extend(f"  {m}" for m in missing)
    (results / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"completed": len(done), "missing": missing, "rows": rows}


# sweeps

@dataclasses.dataclass
class SweepSpec:
    param: str
    values: list[Any]
    base: dict

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        set_param(self.base, self.param, self.values[0])


def run_sweep(sweep: SweepSpec, out: str | Path | None = None) -> int:
    """The base config once per value, then ``sweep.csv``.

    ``AP_normalized`` divides each value's AP by the smallest AP among the
    swept values for the same (method, target).
    """
    base_cfg = apply_env(config_from_dict(sweep.base))
    out = Path(out or base_cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = [apply_env(config_from_dict(set_param(sweep.base, sweep.param, v)))
               for v in sweep.values]
    status = EXIT_OK
    results = []
    for value, cfg in zip(sweep.values, configs):
        sub = out / f"{sweep.param}={value}"
        code = run_matrix(cfg, sub)
        status = max(status, code)
        done, _ = collect_runs(sub)
        for row in aggregate_rows([r for r, _ in done], 1.0,
                                  [(m, t) for m in cfg.methods for t in cfg.targets]):
            results.append((value, row))
    min_ap: dict[tuple[str, str], float] = {}
    for _, row in results:
        if row["AP_mean"] is not None:
            key = (row["method"], row["target"])
            min_ap[key] = min(min_ap.get(key, np.inf), row["AP_mean"])
    rows = []
    for value, row in results:
        key = (row["method"], row["target"])
        ap = row["AP_mean"]
        rows.append({"value": value, "AF": row["AF_mean"],
                     "AP_normalized": None if ap is None or key not in min_ap
                     else ap / min_ap[key],
                     "AvgPerf": row["AvgPerf_mean"], "AP": ap,
                     "method": row["method"], "target": row["target"]})
    _write_csv(out / "sweep.csv",
               ["value", "AF", "AP_normalized", "AvgPerf", "AP", "method", "target"], rows)
    return status


__all__ = ["run_matrix", "run_single", "run_sweep", "SweepSpec", "emit_report",
           "collect_runs", "aggregate_rows", "build_task_data", "load_series", "apply_env",
           "train_settings", "model_spec", "EXIT_OK", "EXIT_PARTIAL",
           "EXIT_CONFIG"]
