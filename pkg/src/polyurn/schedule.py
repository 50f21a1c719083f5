"""Addition schedules sigma_n (balls added at step n) and running totals tau_n.

tau_0 is the initial total mass of the urn and tau_{n+1} = tau_n + sigma_{n+1}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

CONSTANT = "constant"
POLYNOMIAL = "polynomial"
EXPLICIT = "explicit"

DIVERGES = "diverges"
CONVERGES = "converges"
INCONCLUSIVE = "inconclusive"

_MAX_EXACT = 2.0 ** 53


class ScheduleExhausted(IndexError):
    pass


@dataclass(frozen=True)
class ScheduleSpec:
    family: str
    c: int = 1
    p: float = 1.0
    values: tuple = ()
    on_exhaust: str = "cycle"
    tau0: float = 1.0

    def __post_init__(self):
        if self.family == CONSTANT:
            if int(self.c) != self.c or self.c < 1:
                raise ValueError("constant schedule needs a positive integer c")
        elif self.family == POLYNOMIAL:
            if not self.p >= 0:
                raise ValueError("polynomial degree p must be >= 0")
        elif self.family == EXPLICIT:
            if not self.values:
                raise ValueError("explicit schedule needs at least one value")
            if any(int(v) != v or v < 1 for v in self.values):
                raise ValueError("explicit schedule values must be positive integers")
            if self.on_exhaust not in ("cycle", "error"):
                raise ValueError("on_exhaust must be 'cycle' or 'error'")
        else:
            raise ValueError(f"unknown schedule family {self.family!r}")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")

    def with_tau0(self, tau0: float) -> "ScheduleSpec":
        return replace(self, tau0=float(tau0))

    def to_config(self) -> dict:
        if self.family == CONSTANT:
            return {"family": CONSTANT, "c": int(self.c)}
        if self.family == POLYNOMIAL:
            return {"family": POLYNOMIAL, "p": float(self.p)}
        return {"family": EXPLICIT, "values": [int(v) for v in self.values], "on_exhaust": self.on_exhaust}

    @property
    def length(self):
        """Number of defined terms, or None for an infinite schedule."""
        if self.family == EXPLICIT and self.on_exhaust == "error":
            return len(self.values)
        return None


def constant(c: int = 1, tau0: float = 1.0) -> ScheduleSpec:
    return ScheduleSpec(CONSTANT, c=int(c), tau0=tau0)


def polynomial(p: float, tau0: float = 1.0) -> ScheduleSpec:
    return ScheduleSpec(POLYNOMIAL, p=float(p), tau0=tau0)


def explicit(values, on_exhaust: str = "cycle", tau0: float = 1.0) -> ScheduleSpec:
    return ScheduleSpec(EXPLICIT, values=tuple(int(v) for v in values), on_exhaust=on_exhaust, tau0=tau0)


def from_config(cfg: dict, tau0: float = 1.0) -> ScheduleSpec:
    family = cfg.get("family")
    if family == CONSTANT:
        return constant(cfg.get("c", 1), tau0)
    if family == POLYNOMIAL:
        return polynomial(cfg["p"], tau0)
    if family == EXPLICIT:
        return explicit(cfg["values"], cfg.get("on_exhaust", "cycle"), tau0)
    raise ValueError(f"unknown schedule family {family!r}")


def _round_half_up(x):
    return np.floor(x + 0.5)


@lru_cache(maxsize=32)
def _sigmas_cached(s: ScheduleSpec, n: int) -> np.ndarray:
    idx = np.arange(1, n + 1)
    if s.family == CONSTANT:
        out = np.full(n, s.c, dtype=np.int64)
    elif s.family == POLYNOMIAL:
        raw = _round_half_up(idx.astype(float) ** s.p)
        if n and raw[-1] > _MAX_EXACT:
            raise OverflowError(f"sigma_{n} = {raw[-1]:.3g} exceeds exact integer range")
        out = np.maximum(1, raw).astype(np.int64)
    else:
        vals = np.asarray(s.values, dtype=np.int64)
        if n > len(vals) and s.on_exhaust == "error":
            raise ScheduleExhausted(f"explicit schedule has {len(vals)} values; step {n} requested")
        out = vals[(idx - 1) % len(vals)]
    out.setflags(write=False)
    return out


def sigmas(s: ScheduleSpec, n: int) -> np.ndarray:
    """sigma_1 .. sigma_n as a read-only int64 array."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _sigmas_cached(s, int(n))


def taus(s: ScheduleSpec, n: int) -> np.ndarray:
    """tau_0 .. tau_n as floats."""
    out = np.empty(n + 1)
    out[0] = s.tau0
    np.cumsum(sigmas(s, n), out=out[1:])
    out[1:] += s.tau0
    return out


def sigma(s: ScheduleSpec, n: int) -> int:
    if n < 1:
        raise ValueError("sigma is defined for n >= 1")
    if s.family == CONSTANT:
        return int(s.c)
    if s.family == POLYNOMIAL:
        raw = math.floor(float(n) ** s.p + 0.5)
        if raw > _MAX_EXACT:
            raise OverflowError(f"sigma_{n} exceeds exact integer range")
        return max(1, int(raw))
    if n > len(s.values) and s.on_exhaust == "error":
        raise ScheduleExhausted(f"explicit schedule has {len(s.values)} values; step {n} requested")
    return int(s.values[(n - 1) % len(s.values)])


def tau(s: ScheduleSpec, n: int) -> float:
    if n < 0:
        raise ValueError("tau is defined for n >= 0")
    if n == 0:
        return float(s.tau0)
    return float(s.tau0 + sigmas(s, n).sum(dtype=float))


def delta(s: ScheduleSpec, n: int) -> float:
    """Largest admissible radius sigma_{n+1} / (tau_n + 2 sigma_{n+1})."""
    sig = sigma(s, n + 1)
    return sig / (tau(s, n) + 2 * sig)


@dataclass
class ConditionReport:
    cond_i_verdict: str
    cond_ii_verdict: str
    partial_sum_i: float
    partial_sum_ii: float
    ratio_tail: float
    horizon: int
    method: str
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.cond_i_verdict == DIVERGES and self.cond_ii_verdict == CONVERGES

    def to_dict(self) -> dict:
        return {
            "cond_i_verdict": self.cond_i_verdict,
            "cond_ii_verdict": self.cond_ii_verdict,
            "partial_sum_i": float(self.partial_sum_i),
            "partial_sum_ii": float(self.partial_sum_ii),
            "ratio_tail": float(self.ratio_tail),
            "horizon": int(self.horizon),
            "method": self.method,
            "note": self.note,
            "holds": self.holds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionReport":
        return cls(d["cond_i_verdict"], d["cond_ii_verdict"], d["partial_sum_i"], d["partial_sum_ii"],
                   d["ratio_tail"], d["horizon"], d["method"], d.get("note", ""))


def _slope_verdict(slope, threshold, band):
    # sum of n**-b diverges iff b <= threshold
    if slope < threshold - band:
        return DIVERGES
    if slope > threshold + band:
        return CONVERGES
    return INCONCLUSIVE


def check_conditions(s: ScheduleSpec, horizon: int = 10**6, band: float = 0.15) -> ConditionReport:
    """Verdicts on sum sigma_n/tau_n = inf (i) and sum (sigma_n/tau_n)^2 < inf (ii).

    (i) always diverges: sigma_n >= 1 forces tau_n -> inf, and then
    sum sigma_n/tau_n = inf (Abel-Dini). For (ii), constant, polynomial and
    cycled explicit schedules get analytic verdicts; a finite
    (``on_exhaust="error"``) explicit schedule is judged by fitting the decay
    exponent of sigma_n/tau_n over the second half of its terms.
    """
    if horizon < 100:
        raise ValueError("horizon must be >= 100")
    n = horizon if s.length is None else min(horizon, s.length)
    if s.family == POLYNOMIAL:
        # float path: partial sums only, no exact-integer guard needed
        sig = np.maximum(1.0, _round_half_up(np.arange(1, n + 1, dtype=float) ** s.p))
    else:
        sig = sigmas(s, n).astype(float)
    tau_n = s.tau0 + np.cumsum(sig)
    r = sig / tau_n
    ps1, ps2 = float(r.sum()), float((r ** 2).sum())
    tail = float(r[-1])

    if s.family in (CONSTANT, POLYNOMIAL):
        note = "sigma_n/tau_n ~ (p+1)/n" if s.family == POLYNOMIAL else "sigma_n/tau_n ~ 1/n"
        return ConditionReport(DIVERGES, CONVERGES, ps1, ps2, tail, n, "analytic", note)
    if s.length is None:
        return ConditionReport(DIVERGES, CONVERGES, ps1, ps2, tail, n, "analytic",
                               "cycled schedule is bounded, so sigma_n/tau_n <= max(sigma)/n")

    lo = max(1, n // 2)
    k = np.arange(lo, n + 1)
    rr = r[lo - 1:]
    if np.all(rr > 0) and len(k) >= 3:
        slope = -np.polyfit(np.log(k), np.log(rr), 1)[0]
    else:
        slope = np.nan
    if not np.isfinite(slope):
        return ConditionReport(DIVERGES, INCONCLUSIVE, ps1, ps2, tail, n, "heuristic", "fit failed")
    note = f"fitted sigma_n/tau_n ~ n^-{slope:.3f} over [{lo}, {n}]"
    return ConditionReport(DIVERGES, _slope_verdict(slope, 0.5, band), ps1, ps2, tail, n, "heuristic", note)
