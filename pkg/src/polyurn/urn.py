"""The stochastic urn recursion.

At step n+1, sigma_{n+1} balls are drawn i.i.d. with colour probabilities
f(theta_{n,j}) / sum_k f(theta_{n,k}) and added to the urn. Colours are
0-indexed throughout the API.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from . import schedule as sched
from .reinforce import ReinforcementSpec, evaluate

_MAX_EXACT = 2.0 ** 53
DEFAULT_SNAPSHOTS = 512


class UrnError(RuntimeError):
    pass


def replication_rng(master_seed: int, replication: int) -> np.random.Generator:
    """Independent stream for one replication, keyed on (master_seed, replication)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replication),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class UrnState:
    counts: np.ndarray
    step: int = 0
    total: float = None

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("an urn needs d >= 2 colours")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValueError("counts must be finite and non-negative")
        total = float(counts.sum()) if self.total is None else float(self.total)
        if not total > 0:
            raise ValueError("at least one count must be positive")
        if abs(total - counts.sum()) > 1e-9 * total:
            raise ValueError(f"total {total} does not match sum of counts {counts.sum()}")
        object.__setattr__(self, "total", total)

    @property
    def d(self) -> int:
        return self.counts.size

    @property
    def theta(self) -> np.ndarray:
        return self.counts / self.total


@dataclass(frozen=True)
class DrawRecord:
    step: int
    drawn: np.ndarray
    probs: np.ndarray
    martingale_increment: np.ndarray


def selection_probabilities(state: UrnState, f: ReinforcementSpec) -> np.ndarray:
    """f(theta_i) / sum_k f(theta_k)."""
    fx = np.asarray(evaluate(f, state.theta), dtype=float)
    s = fx.sum()
    if not s > 0:
        raise UrnError(f"all reinforcement values vanish at step {state.step}, counts={state.counts.tolist()}")
    return fx / s


def step(state: UrnState, f: ReinforcementSpec, s: sched.ScheduleSpec,
         rng: np.random.Generator) -> tuple[UrnState, DrawRecord]:
    """Draw sigma_{n+1} balls and return the next state with its draw record."""
    sig = sched.sigma(s, state.step + 1)
    code, params, breaks, coefs = f.kernel_params()
    counts = state.counts.copy()
    probs = np.empty(state.d)
    drawn = np.zeros(state.d, dtype=np.int64)
    new_total = _kernels.step(rng, code, params, breaks, coefs, counts, state.total, sig, probs, drawn)
    if new_total < 0:
        raise UrnError(f"all reinforcement values vanish at step {state.step}, counts={state.counts.tolist()}")
    if new_total > _MAX_EXACT:
        raise UrnError(f"total {new_total:.3g} exceeds exact integer range")
    record = DrawRecord(state.step + 1, drawn, probs, drawn - sig * probs)
    return UrnState(counts, state.step + 1, new_total), record


@dataclass
class RunSummary:
    steps: int
    final_theta: list
    final_tau: float
    dominant_color: Optional[int]
    dominance_margin: float
    dominance_eps: float
    fixation_color: Optional[int]
    fixation_onset: Optional[int]
    fixation_window: Optional[int]
    martingale_sq_norm: float
    martingale_start: int
    master_seed: Optional[int] = None
    replication: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "replication": self.replication,
            "master_seed": self.master_seed,
            "steps": int(self.steps),
            "final_theta": [float(v) for v in self.final_theta],
            "final_tau": float(self.final_tau),
            "dominant_color": self.dominant_color,
            "dominance_margin": float(self.dominance_margin),
            "dominance_eps": float(self.dominance_eps),
            "fixation_color": self.fixation_color,
            "fixation_onset": self.fixation_onset,
            "fixation_window": self.fixation_window,
            "martingale_sq_norm": float(self.martingale_sq_norm),
            "martingale_start": int(self.martingale_start),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunSummary":
        return cls(**d)


@dataclass
class Trajectory:
    steps: np.ndarray
    taus: np.ndarray
    thetas: np.ndarray


@dataclass
class RunResult:
    summary: RunSummary
    trajectory: Trajectory
    drawn: Optional[np.ndarray] = field(default=None, repr=False)
    probs: Optional[np.ndarray] = field(default=None, repr=False)
    martingale: Optional[np.ndarray] = field(default=None, repr=False)


def detect_dominance(theta, eps: float = 0.05) -> Optional[int]:
    """Index of the colour with proportion >= 1 - eps, lowest index on ties."""
    theta = np.asarray(theta, dtype=float)
    i = int(np.argmax(theta))
    return i if theta[i] >= 1.0 - eps else None


def fixation_from_last_hit(last_hit, steps: int, window: int) -> Optional[tuple[int, int]]:
    """Fixation proxy from the last step at which each colour gained a ball.

    Returns (colour, onset) when a single colour received every ball over the
    final ``window`` steps; onset is one past the last step at which any other
    colour gained a ball.
    """
    last_hit = np.asarray(last_hit)
    if window < 1 or steps < window:
        return None
    winner = int(np.argmax(last_hit))
    if last_hit[winner] != steps:
        return None
    others = np.delete(last_hit, winner)
    last_other = int(others.max()) if others.size else 0
    if last_other > steps - window:
        return None
    return winner, last_other + 1


def detect_fixation(drawn_history, window: int) -> Optional[tuple[int, int]]:
    """Fixation proxy from a full (steps x d) history of drawn counts."""
    drawn = np.asarray(drawn_history)
    steps, d = drawn.shape
    last_hit = np.zeros(d, dtype=np.int64)
    for i in range(d):
        hits = np.flatnonzero(drawn[:, i] > 0)
        if hits.size:
            last_hit[i] = hits[-1] + 1
    return fixation_from_last_hit(last_hit, steps, window)


def snapshot_steps(n_steps: int, snapshots: int = DEFAULT_SNAPSHOTS) -> np.ndarray:
    """Evenly spaced recorded steps, always including 0 and n_steps."""
    if snapshots <= 0 or n_steps == 0:
        return np.unique(np.array([0, n_steps], dtype=np.int64))
    k = min(snapshots, n_steps + 1)
    return np.unique(np.round(np.linspace(0, n_steps, max(k, 2))).astype(np.int64))


def run(d: int, U0, f: ReinforcementSpec, s: sched.ScheduleSpec, N: int,
        rng: np.random.Generator, *, snapshots: int = DEFAULT_SNAPSHOTS,
        dominance_eps: float = 0.05, fixation_window: Optional[int] = None,
        martingale_start: int = 0, record_history: bool = False,
        allow_dead_colors: bool = False, master_seed: Optional[int] = None,
        replication: Optional[int] = None) -> RunResult:
    """Run the urn for N steps.

    ``s.tau0`` is overwritten by ``sum(U0)``. The martingale
    sum_{j > martingale_start} dM_j / tau_j is accumulated; with
    ``record_history`` the per-step drawn counts and probabilities are kept.
    """
    U0 = np.array(U0, dtype=float)
    if U0.shape != (d,):
        raise ValueError(f"U0 must have length d={d}")
    if d < 2:
        raise ValueError("d must be >= 2")
    if allow_dead_colors:
        if np.any(U0 < 0) or not U0.sum() > 0:
            raise ValueError("U0 must be non-negative with positive total")
    elif np.any(U0 <= 0):
        raise ValueError("U0 must be strictly positive (set allow_dead_colors to permit zeros)")
    if N < 0:
        raise ValueError("N must be >= 0")
    s = s.with_tau0(U0.sum())
    sig = sched.sigmas(s, N)
    final_tau = s.tau0 + sig.sum(dtype=float)
    if final_tau > _MAX_EXACT:
        raise UrnError(f"tau_N = {final_tau:.3g} exceeds exact integer range")

    code, params, breaks, coefs = f.kernel_params()
    counts = U0.copy()
    snaps = snapshot_steps(N, snapshots)
    status, total, snap_theta, snap_tau, last_hit, mart, h_drawn, h_probs = _kernels.run(
        rng, code, params, breaks, coefs, counts, float(s.tau0), np.ascontiguousarray(sig),
        snaps, int(martingale_start), bool(record_history))
    if status < 0:
        raise UrnError("all reinforcement values vanish during the run")

    theta = counts / total
    fix = fixation_from_last_hit(last_hit, N, fixation_window) if fixation_window else None
    summary = RunSummary(
        steps=N,
        final_theta=theta.tolist(),
        final_tau=float(total),
        dominant_color=detect_dominance(theta, dominance_eps),
        dominance_margin=float(theta.max()),
        dominance_eps=dominance_eps,
        fixation_color=None if fix is None else fix[0],
        fixation_onset=None if fix is None else fix[1],
        fixation_window=fixation_window,
        martingale_sq_norm=float(mart @ mart),
        martingale_start=int(martingale_start),
        master_seed=master_seed,
        replication=replication,
    )
    result = RunResult(summary, Trajectory(snaps, snap_tau, snap_theta), martingale=mart)
    if record_history:
        result.drawn = h_drawn
        result.probs = h_probs
    return result
