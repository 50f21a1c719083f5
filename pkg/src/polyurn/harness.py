"""Experiment configs, deterministic batch execution and report serialization."""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import meanfield as mf
from . import reinforce as rf
from . import schedule as sc
from . import urn

SCHEMA_VERSION = 1
ENV_OUTPUT_DIR = "POLYURN_OUTPUT_DIR"
ENV_THREADS = "POLYURN_THREADS"

_ANALYSIS_DEFAULTS = {"starts": 20, "T": 200.0, "dt": 0.01}


class ConfigError(ValueError):
    """Invalid experiment config; the message starts with the offending field path."""


class BatchError(RuntimeError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("polyurn").joinpath("config.schema.json").read_text())


@dataclass
class ExperimentConfig:
    d: int
    U0: list
    reinforcement: rf.ReinforcementSpec
    schedule: sc.ScheduleSpec
    steps: int
    replications: int = 1
    seed: int = 0
    snapshots: int = urn.DEFAULT_SNAPSHOTS
    dominance_eps: float = 0.05
    fixation_window: Optional[int] = None
    martingale_start: int = 0
    allow_dead_colors: bool = False
    schedule_horizon: int = 10**6
    analysis: dict = field(default_factory=lambda: dict(_ANALYSIS_DEFAULTS))
    output_dir: Optional[str] = None
    output_format: str = "json"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        validator = jsonschema.Draft7Validator(load_schema())
        errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            path = ".".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {e.message}")
        d = raw["d"]
        U0 = [float(v) for v in raw["U0"]]
        if len(U0) != d:
            raise ConfigError(f"U0: expected {d} entries, got {len(U0)}")
        allow_dead = raw.get("allow_dead_colors", False)
        if not allow_dead and min(U0) <= 0:
            raise ConfigError("U0: all entries must be > 0 unless allow_dead_colors is true")
        if sum(U0) <= 0:
            raise ConfigError("U0: total must be positive")
        try:
            f = rf.from_config(raw["reinforcement"])
        except ValueError as exc:
            raise ConfigError(f"reinforcement: {exc}") from None
        try:
            s = sc.from_config(raw["schedule"], tau0=sum(U0))
        except ValueError as exc:
            raise ConfigError(f"schedule: {exc}") from None
        steps = raw["steps"]
        if s.length is not None and steps > s.length:
            raise ConfigError(f"steps: {steps} exceeds the {s.length} values of the explicit schedule")
        out = raw.get("output", {})
        return cls(
            d=d, U0=U0, reinforcement=f, schedule=s, steps=steps,
            replications=raw.get("replications", 1),
            seed=raw.get("seed", 0),
            snapshots=raw.get("snapshots", urn.DEFAULT_SNAPSHOTS),
            dominance_eps=raw.get("dominance_eps", 0.05),
            fixation_window=raw.get("fixation_window"),
            martingale_start=raw.get("martingale_start", 0),
            allow_dead_colors=allow_dead,
            schedule_horizon=raw.get("schedule_horizon", 10**6),
            analysis={**_ANALYSIS_DEFAULTS, **raw.get("analysis", {})},
            output_dir=out.get("dir"),
            output_format=out.get("format", "json"),
        )

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "U0": list(self.U0),
            "allow_dead_colors": self.allow_dead_colors,
            "reinforcement": self.reinforcement.to_config(),
            "schedule": self.schedule.to_config(),
            "steps": self.steps,
            "replications": self.replications,
            "seed": self.seed,
            "snapshots": self.snapshots,
            "dominance_eps": self.dominance_eps,
            "fixation_window": self.fixation_window,
            "martingale_start": self.martingale_start,
            "schedule_horizon": self.schedule_horizon,
            "analysis": dict(self.analysis),
            "output": {"format": self.output_format},
        }
        if self.output_dir is not None:
            out["output"]["dir"] = self.output_dir
        return out


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: not valid JSON ({exc})") from None
    return ExperimentConfig.from_dict(raw)


def hypothesis_warnings(class_r: rf.ClassRReport, cond: sc.ConditionReport) -> list[str]:
    warnings = []
    if not class_r.in_class_r:
        failed = [k for k in ("cond_a", "cond_b", "cond_c") if not getattr(class_r, k).passed]
        warnings.append("reinforcement function outside class R: " + ", ".join(failed) + " failed")
    if cond.cond_i_verdict != sc.DIVERGES:
        warnings.append(f"condition (i) fails: sum sigma_n/tau_n verdict is {cond.cond_i_verdict}")
    if cond.cond_ii_verdict != sc.CONVERGES:
        warnings.append(f"condition (ii) fails: sum (sigma_n/tau_n)^2 verdict is {cond.cond_ii_verdict}")
    return warnings


@dataclass
class BatchReport:
    config: dict
    class_r: dict
    conditions: dict
    warnings: list
    theta0: list
    replications: int
    steps: int
    dominance_frequency: list
    dominated_fraction: float
    fixation_fraction: Optional[float]
    fixation_onset: Optional[dict]
    fixated_all_dominated: Optional[bool]
    martingale_mean: float
    martingale_stderr: float
    martingale_max: float
    martingale_bound: Optional[float]
    runs: list
    trajectories: Optional[dict] = field(default=None, repr=False, compare=False)

    @property
    def hypotheses_hold(self) -> bool:
        return not self.warnings

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "class_r": self.class_r,
            "conditions": self.conditions,
            "hypotheses_hold": self.hypotheses_hold,
            "warnings": list(self.warnings),
            "theta0": list(self.theta0),
            "replications": self.replications,
            "steps": self.steps,
            "dominance_frequency": list(self.dominance_frequency),
            "dominated_fraction": self.dominated_fraction,
            "fixation_fraction": self.fixation_fraction,
            "fixation_onset": self.fixation_onset,
            "fixated_all_dominated": self.fixated_all_dominated,
            "martingale_mean": self.martingale_mean,
            "martingale_stderr": self.martingale_stderr,
            "martingale_max": self.martingale_max,
            "martingale_bound": self.martingale_bound,
            "runs": [r.to_dict() for r in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BatchReport":
        keys = [k for k in cls.__dataclass_fields__ if k not in ("runs", "trajectories")]
        kwargs = {k: d[k] for k in keys}
        return cls(**kwargs, runs=[urn.RunSummary.from_dict(r) for r in d["runs"]])

    @classmethod
    def from_json(cls, text: str) -> "BatchReport":
        return cls.from_dict(json.loads(text))


def _quantiles(values):
    if not values:
        return None
    v = np.asarray(values, dtype=float)
    return {"min": int(v.min()), "median": float(np.median(v)), "p90": float(np.quantile(v, 0.9))}


def aggregate(config: ExperimentConfig, summaries: list, class_r: rf.ClassRReport,
              cond: sc.ConditionReport) -> BatchReport:
    """Build a report from per-run summaries alone (sorted by replication)."""
    summaries = sorted(summaries, key=lambda r: r.replication)
    R, d = len(summaries), config.d
    counts = np.zeros(d)
    for r in summaries:
        if r.dominant_color is not None:
            counts[r.dominant_color] += 1
    mart = np.array([r.martingale_sq_norm for r in summaries])
    if config.fixation_window:
        fixated = [r for r in summaries if r.fixation_color is not None]
        fix_frac = len(fixated) / R
        onset = _quantiles([r.fixation_onset for r in fixated])
        all_dom = all(r.dominant_color == r.fixation_color for r in fixated)
    else:
        fix_frac, onset, all_dom = None, None, None
    U0 = np.asarray(config.U0, dtype=float)
    s = config.schedule.with_tau0(U0.sum())
    eta = config.martingale_start
    bound = float(d / sc.tau(s, eta)) if eta <= config.steps else None
    return BatchReport(
        config=config.to_dict(),
        class_r=class_r.to_dict(),
        conditions=cond.to_dict(),
        warnings=hypothesis_warnings(class_r, cond),
        theta0=(U0 / U0.sum()).tolist(),
        replications=R,
        steps=config.steps,
        dominance_frequency=(counts / R).tolist(),
        dominated_fraction=float(counts.sum() / R),
        fixation_fraction=fix_frac,
        fixation_onset=onset,
        fixated_all_dominated=all_dom,
        martingale_mean=float(mart.mean()),
        martingale_stderr=float(mart.std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0,
        martingale_max=float(mart.max()),
        martingale_bound=bound,
        runs=summaries,
    )


def default_threads() -> int:
    env = os.environ.get(ENV_THREADS)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_batch(config: ExperimentConfig, threads: Optional[int] = None,
              keep_trajectories: bool = False) -> BatchReport:
    """Run every replication on its own RNG stream and aggregate.

    Output does not depend on ``threads``: each replication's stream is keyed
    on (seed, replication index) and results are sorted before aggregation.
    """
    threads = threads or default_threads()
    f, s = config.reinforcement, config.schedule
    class_r = rf.validate_class_r(f)
    cond = sc.check_conditions(s, config.schedule_horizon)

    def one(i):
        rng = urn.replication_rng(config.seed, i)
        try:
            return urn.run(config.d, config.U0, f, s, config.steps, rng,
                           snapshots=config.snapshots, dominance_eps=config.dominance_eps,
                           fixation_window=config.fixation_window,
                           martingale_start=config.martingale_start,
                           allow_dead_colors=config.allow_dead_colors,
                           master_seed=config.seed, replication=i)
        except Exception as exc:
            raise BatchError(f"replication {i} (master seed {config.seed}) failed: {exc}") from exc

    if threads == 1:
        results = [one(i) for i in range(config.replications)]
    else:
        # compile the kernels once before fanning out
        urn.run(config.d, config.U0, f, s, min(1, config.steps), np.random.default_rng(0),
                allow_dead_colors=config.allow_dead_colors)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(config.replications)))
    report = aggregate(config, [r.summary for r in results], class_r, cond)
    if keep_trajectories:
        report.trajectories = {r.summary.replication: r.trajectory for r in results}
    return report


def write_trajectories_csv(path, trajectories: dict, d: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "step", "tau"] + [f"theta_{i + 1}" for i in range(d)])
        for run_id in sorted(trajectories):
            tr = trajectories[run_id]
            for step, tau, theta in zip(tr.steps, tr.taus, tr.thetas):
                w.writerow([run_id, int(step), repr(float(tau))] + [repr(float(v)) for v in theta])


def write_runs_csv(path, report: BatchReport) -> None:
    d = len(report.theta0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "dominant_color", "dominance_margin", "fixation_color", "fixation_onset",
                    "martingale_sq_norm", "final_tau"] + [f"theta_{i + 1}" for i in range(d)])
        for r in report.runs:
            w.writerow([r.replication, "" if r.dominant_color is None else r.dominant_color,
                        repr(r.dominance_margin), "" if r.fixation_color is None else r.fixation_color,
                        "" if r.fixation_onset is None else r.fixation_onset,
                        repr(r.martingale_sq_norm), repr(r.final_tau)]
                       + [repr(float(v)) for v in r.final_theta])


def resolve_output_dir(config: ExperimentConfig, override=None) -> Path:
    out = override or os.environ.get(ENV_OUTPUT_DIR) or config.output_dir or "polyurn-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_batch_outputs(report: BatchReport, out_dir: Path, fmt: str) -> list[Path]:
    written = [out_dir / "report.json"]
    written[0].write_text(report.to_json())
    if fmt == "csv":
        d = len(report.theta0)
        runs_path = out_dir / "runs.csv"
        write_runs_csv(runs_path, report)
        written.append(runs_path)
        if report.trajectories is not None:
            traj_path = out_dir / "trajectories.csv"
            write_trajectories_csv(traj_path, report.trajectories, d)
            written.append(traj_path)
    return written


@dataclass
class Analysis:
    class_r: dict
    equilibria: list
    flows: list
    starts: np.ndarray

    def equilibria_json(self) -> str:
        return json.dumps(self.equilibria, indent=2) + "\n"


def analyze(config: ExperimentConfig) -> Analysis:
    """Equilibria with stability reports, plus flows from Dirichlet starts."""
    model = mf.MeanFieldModel(config.d, config.reinforcement)
    points = mf.equilibria(model)
    eq = []
    for p in points:
        entry = p.to_dict()
        try:
            entry["stability"] = mf.jacobian(model, p.coordinates).to_dict()
        except rf.ClassRViolation as exc:
            entry["stability"] = {"error": str(exc)}
        eq.append(entry)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    starts = mf.random_starts(config.d, int(config.analysis["starts"]), rng)
    flows = [mf.flow(model, y0, T=config.analysis["T"], dt=config.analysis["dt"]) for y0 in starts]
    return Analysis(rf.validate_class_r(config.reinforcement).to_dict(), eq, flows, starts)


def write_flow_csv(path, trajectory: mf.FlowTrajectory) -> None:
    d = trajectory.ys.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"y_{i + 1}" for i in range(d)] + ["F"])
        for t, y, F in zip(trajectory.times, trajectory.ys, trajectory.F):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in y] + [repr(float(F))])
