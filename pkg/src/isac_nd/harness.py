"""Experiment orchestration: replication batches, sweeps, theory, CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import analytics
from .config import ConfigError, ScenarioConfig
from .engine import RunRecord, run_replication, simulate
from .policies import get_algorithm

log = logging.getLogger(__name__)

Z95 = statistics.NormalDist().inv_cdf(0.975)

SIMULATION_COLUMNS = ("slot", "mean_nd_ratio", "ci_halfwidth")
SUMMARY_COLUMNS = ("algorithm", "N", "rc_ratio", "mean_convergence_slots", "completeness_rate")
THEORY_COLUMNS = ("t", "D", "I", "P", "N_expected")
VALIDATE_COLUMNS = ("slot", "sim_N", "sim_ci_halfwidth", "theory_N", "abs_deviation")

SWEEP_AXES = {
    "N": "n_nodes",
    "n_nodes": "n_nodes",
    "rc_ratio": "rc_ratio",
    "epsilon0": "epsilon0",
    "eps0": "epsilon0",
    "alpha": "alpha",
    "beamwidth": "beamwidth_deg",
    "beamwidth_deg": "beamwidth_deg",
}


def half_width(values: Sequence[float]) -> float:
    """Normal-approximation 95% confidence half-width of the mean."""
    if len(values) < 2:
        return 0.0
    return Z95 * statistics.stdev(values) / math.sqrt(len(values))


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    algorithm: str
    records: list[RunRecord] = field(default_factory=list)

    @property
    def replications(self) -> int:
        return len(self.records)

    @property
    def convergence_times(self) -> np.ndarray:
        return np.array([r.convergence_time for r in self.records], dtype=np.float64)

    @property
    def mean_convergence(self) -> float:
        return float(np.mean(self.convergence_times)) if self.records else math.nan

    @property
    def median_convergence(self) -> float:
        return float(np.median(self.convergence_times)) if self.records else math.nan

    @property
    def ci_halfwidth(self) -> float:
        return half_width(self.convergence_times.tolist())

    @property
    def completeness_rate(self) -> float:
        return float(np.mean([r.complete for r in self.records])) if self.records else math.nan

    @property
    def capped_runs(self) -> int:
        return sum(r.capped for r in self.records)

    @property
    def non_convergent(self) -> bool:
        return self.capped_runs * 2 > len(self.records)

    @property
    def longest_run(self) -> int:
        return max((len(r.discoveries) for r in self.records), default=0)

    def nd_matrix(self, horizon: int | None = None) -> np.ndarray:
        h = self.longest_run if horizon is None else horizon
        if not self.records:
            return np.zeros((0, h))
        return np.vstack([r.nd_ratio(h) for r in self.records])

    def nd_curve(self, horizon: int | None = None) -> np.ndarray:
        m = self.nd_matrix(horizon)
        return m.mean(axis=0) if len(m) else np.zeros(m.shape[1])

    def nd_ci(self, horizon: int | None = None) -> np.ndarray:
        m = self.nd_matrix(horizon)
        if len(m) < 2:
            return np.zeros(m.shape[1])
        return Z95 * m.std(axis=0, ddof=1) / math.sqrt(len(m))

    def discovered_curve(self, horizon: int | None = None) -> np.ndarray:
        return self.nd_curve(horizon) * (self.config.n_nodes - 1)

    def summary(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "N": self.config.n_nodes,
            "rc_ratio": self.config.rc_ratio,
            "replications": self.replications,
            "mean_convergence_slots": self.mean_convergence,
            "median_convergence_slots": self.median_convergence,
            "ci_halfwidth": self.ci_halfwidth,
            "completeness_rate": self.completeness_rate,
            "capped_runs": self.capped_runs,
            "non_convergent": self.non_convergent,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "algorithm": self.algorithm,
            "summary": self.summary(),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentResult":
        cfg = ScenarioConfig(**data["config"])
        return cls(cfg, data["algorithm"], [RunRecord.from_dict(r) for r in data["records"]])


def _seeds(config: ScenarioConfig) -> list[int]:
    return list(range(config.base_seed, config.base_seed + config.replications))


def run_experiment(
    config: ScenarioConfig,
    algorithm: str | None = None,
    *,
    workers: int = 1,
    event_log: str | Path | None = None,
) -> ExperimentResult:
    """``replications`` independent runs with seeds base_seed .. base_seed + R - 1."""
    name = get_algorithm(algorithm or config.algorithm).name
    seeds = _seeds(config)
    if event_log is not None:
        records = []
        with open(event_log, "a") as fh:
            for s in seeds:
                fh.write(json.dumps({"event": "run", "algorithm": name, "seed": s}) + "\n")
                records.append(simulate(config, name, s, event_log=fh).record)
    elif workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_replication, [config] * len(seeds), [name] * len(seeds), seeds))
    else:
        records = [run_replication(config, name, s) for s in seeds]
    records.sort(key=lambda r: r.seed)
    result = ExperimentResult(config, name, records)
    if result.capped_runs:
        log.warning("%s: %d of %d runs hit the slot cap", name, result.capped_runs, len(records))
    if result.non_convergent:
        log.warning("%s flagged non-convergent (>50%% of runs capped)", name)
    return result


def compare(config: ScenarioConfig, *, workers: int = 1) -> dict[str, ExperimentResult]:
    """Every algorithm in ``config.algorithms`` on the same seeds (paired comparison)."""
    return {a: run_experiment(config, a, workers=workers) for a in config.algorithms}


def sweep(
    config: ScenarioConfig,
    axis: str,
    values: Iterable[Any],
    algorithm: str | None = None,
    *,
    workers: int = 1,
) -> list[ExperimentResult]:
    """One experiment per axis value; every point reuses the same base seed."""
    try:
        key = SWEEP_AXES[axis]
    except KeyError:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(sorted(SWEEP_AXES))}") from None
    out = []
    for v in values:
        cfg = config.replace(**{key: v})
        log.info("sweep %s=%s", key, v)
        out.append(run_experiment(cfg, algorithm, workers=workers))
    return out


def theory(config: ScenarioConfig, algorithm: str | None = None, *, strict: bool = False) -> analytics.AnalyticSeries:
    name = get_algorithm(algorithm or config.algorithm).name
    if name not in analytics.CURVES:
        raise ConfigError(
            f"no analytic model for {name}; available: {', '.join(analytics.ANALYTIC_ALGORITHMS)}"
        )
    params = analytics.AnalyticParams(config.n_nodes, config.beam_count, config.p_transmit, config.horizon)
    return analytics.curve(name, params, strict=strict)


@dataclass
class FitReport:
    algorithm: str
    ramp_end: int
    mad: float  # mean |N_sim - N_theory| over the ramp
    relative_mad: float  # mad / (N - 1)
    tolerance: float
    slots: np.ndarray
    sim: np.ndarray
    sim_ci: np.ndarray
    model: np.ndarray

    @property
    def passed(self) -> bool:
        return self.relative_mad <= self.tolerance


def ramp_end(curve: np.ndarray, fraction: float = 0.9) -> int:
    """Number of leading slots until ``curve`` first reaches ``fraction`` of its final value."""
    if len(curve) == 0:
        return 0
    target = fraction * curve[-1]
    return int(np.argmax(curve >= target)) + 1


def fit_report(
    result: ExperimentResult, *, tolerance: float = 0.15, horizon: int | None = None, strict: bool = False
) -> FitReport:
    """Mean absolute deviation of the analytic curve from the simulated mean over 90% of the ramp."""
    cfg = result.config
    h = result.longest_run if horizon is None else horizon
    sim = result.discovered_curve(h)
    ci = result.nd_ci(h) * (cfg.n_nodes - 1)
    model = theory(cfg.replace(horizon=h), result.algorithm, strict=strict).expected
    end = ramp_end(sim)
    mad = float(np.mean(np.abs(sim[:end] - model[:end]))) if end else 0.0
    return FitReport(
        result.algorithm, end, mad, mad / (cfg.n_nodes - 1), tolerance, np.arange(1, h + 1), sim, ci, model
    )


# --- emission --------------------------------------------------------------------


def _write_csv(path: str | Path | None, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def simulation_rows(result: ExperimentResult, horizon: int | None = None) -> list[tuple[int, float, float]]:
    curve, ci = result.nd_curve(horizon), result.nd_ci(horizon)
    return [(t + 1, float(curve[t]), float(ci[t])) for t in range(len(curve))]


def simulation_csv(result: ExperimentResult | None, path: str | Path | None = None, horizon: int | None = None) -> str:
    rows = simulation_rows(result, horizon) if result is not None else []
    return _write_csv(path, SIMULATION_COLUMNS, rows)


def summary_csv(results: Sequence[ExperimentResult], path: str | Path | None = None) -> str:
    rows = [
        (r.algorithm, r.config.n_nodes, r.config.rc_ratio, r.mean_convergence, r.completeness_rate)
        for r in results
    ]
    return _write_csv(path, SUMMARY_COLUMNS, rows)


def theory_csv(series: analytics.AnalyticSeries | None, path: str | Path | None = None) -> str:
    return _write_csv(path, THEORY_COLUMNS, series.rows() if series is not None else [])


def compare_csv(results: dict[str, ExperimentResult], path: str | Path | None = None, horizon: int | None = None) -> str:
    """One mean ND-ratio column per algorithm, keyed by slot."""
    h = max((r.longest_run for r in results.values()), default=0) if horizon is None else horizon
    curves = {name: r.nd_curve(h) for name, r in results.items()}
    rows = [(t + 1, *(float(c[t]) for c in curves.values())) for t in range(h)]
    return _write_csv(path, ("slot", *curves), rows)


def validate_csv(report: FitReport, path: str | Path | None = None) -> str:
    rows = [
        (int(t), float(s), float(c), float(m), float(abs(s - m)))
        for t, s, c, m in zip(report.slots, report.sim, report.sim_ci, report.model)
    ]
    return _write_csv(path, VALIDATE_COLUMNS, rows)


def to_json(obj: Any) -> str:
    if isinstance(obj, ExperimentResult):
        payload: Any = obj.to_dict()
    elif isinstance(obj, analytics.AnalyticSeries):
        payload = {
            "algorithm": obj.algorithm,
            "params": vars(obj.params),
            "clamp_events": obj.clamp_events,
            "rows": [dict(zip(THEORY_COLUMNS, r)) for r in obj.rows()],
        }
    elif isinstance(obj, FitReport):
        payload = {
            "algorithm": obj.algorithm,
            "ramp_end": obj.ramp_end,
            "mad": obj.mad,
            "relative_mad": obj.relative_mad,
            "tolerance": obj.tolerance,
            "passed": obj.passed,
        }
    elif isinstance(obj, dict):
        payload = {k: json.loads(to_json(v)) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        payload = [json.loads(to_json(v)) for v in obj]
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")
    return json.dumps(payload, indent=1, sort_keys=True)


def emit(obj: Any, fmt: str, path: str | Path | None = None) -> str:
    """Write a result, list of results, comparison dict, fit report or analytic series."""
    if fmt == "json":
        text = to_json(obj)
        if path is not None:
            Path(path).write_text(text)
        return text
    if fmt != "csv":
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    if obj is None or isinstance(obj, ExperimentResult):
        return simulation_csv(obj, path)
    if isinstance(obj, analytics.AnalyticSeries):
        return theory_csv(obj, path)
    if isinstance(obj, FitReport):
        return validate_csv(obj, path)
    if isinstance(obj, dict):
        return compare_csv(obj, path)
    if isinstance(obj, (list, tuple)):
        return summary_csv(obj, path)
    raise TypeError(f"cannot emit {type(obj).__name__}")


def load_result(path: str | Path) -> ExperimentResult:
    return ExperimentResult.from_dict(json.loads(Path(path).read_text()))
