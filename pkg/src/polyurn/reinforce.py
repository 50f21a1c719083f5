"""Reinforcement functions f: [0, 1] -> R+ and numerical class-R certification.

Three families are built in:

* ``power``      f(x) = x**a
* ``power_exp``  f(x) = x**(2 + eps) * exp(1 - x)
* ``tabulated``  monotone piecewise-cubic (PCHIP) interpolation of (x, f(x)) data

A function belongs to class R when it is non-decreasing and continuous with
f(0) = 0, f(1) = 1 (condition A), continuously differentiable with finite
one-sided derivatives at the end points (condition B), and
inf x f'(x) / f(x) > 1 (condition C).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

POWER = "power"
POWER_EXP = "power_exp"
TABULATED = "tabulated"

ANALYTIC = "analytic"
CENTRAL_DIFFERENCE = "central_difference"

GRID_POINTS = 10001
GRID_INSET = 1e-6
FD_STEP = 1e-6
ALPHA_TOL = 1e-9

# integer family codes shared with the compiled kernels
_FAMILY_CODES = {POWER: 0, POWER_EXP: 1, TABULATED: 2}


class ClassRViolation(ValueError):
    """Raised when a quantity required by class R is not finite."""


@dataclass(frozen=True)
class ReinforcementSpec:
    """An immutable reinforcement function.

    Use :func:`power`, :func:`power_exp`, :func:`tabulated` or
    :func:`from_config` rather than calling the constructor directly.
    """

    family: str
    exponent: float = 2.0
    epsilon: float = 0.1
    points: tuple = ()
    derivative_mode: str = ANALYTIC
    fd_step: float = FD_STEP
    _interp: Optional[PchipInterpolator] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in _FAMILY_CODES:
            raise ValueError(f"unknown reinforcement family {self.family!r}")
        if self.derivative_mode not in (ANALYTIC, CENTRAL_DIFFERENCE):
            raise ValueError(f"unknown derivative mode {self.derivative_mode!r}")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.family == POWER and not self.exponent > 0:
            raise ValueError("power exponent must be > 0")
        if self.family == POWER_EXP and not self.epsilon > 0:
            raise ValueError("power_exp epsilon must be > 0")
        if self.family == TABULATED:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
                raise ValueError("tabulated points must be a list of at least two [x, f] pairs")
            xs, ys = pts[:, 0], pts[:, 1]
            if np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated x values must be strictly increasing")
            if xs[0] != 0.0 or xs[-1] != 1.0:
                raise ValueError("tabulated x values must span exactly [0, 1]")
            if np.any(ys < 0) or not np.all(np.isfinite(ys)):
                raise ValueError("tabulated f values must be finite and non-negative")
            if np.any(np.diff(ys) < 0):
                raise ValueError("tabulated f values must be non-decreasing")
            object.__setattr__(self, "_interp", PchipInterpolator(xs, ys, extrapolate=False))
            # no closed form for f' of tabulated data
            object.__setattr__(self, "derivative_mode", CENTRAL_DIFFERENCE)

    def __call__(self, x):
        return evaluate(self, x)

    def to_config(self) -> dict:
        if self.family == POWER:
            cfg = {"family": POWER, "exponent": float(self.exponent)}
        elif self.family == POWER_EXP:
            cfg = {"family": POWER_EXP, "epsilon": float(self.epsilon)}
        else:
            cfg = {"family": TABULATED, "points": [list(map(float, p)) for p in self.points]}
        if self.derivative_mode != ANALYTIC and self.family != TABULATED:
            cfg["derivative"] = {"mode": self.derivative_mode, "step": self.fd_step}
        return cfg

    def kernel_params(self):
        """Flat arrays describing f for the compiled kernels."""
        if self.family == POWER:
            params = np.array([self.exponent], dtype=float)
        elif self.family == POWER_EXP:
            params = np.array([self.epsilon], dtype=float)
        else:
            params = np.zeros(1)
        if self.family == TABULATED:
            breaks = np.ascontiguousarray(self._interp.x, dtype=float)
            coefs = np.ascontiguousarray(self._interp.c, dtype=float)
        else:
            breaks = np.zeros(2)
            coefs = np.zeros((4, 1))
        return _FAMILY_CODES[self.family], params, breaks, coefs


def power(exponent: float, derivative_mode: str = ANALYTIC) -> ReinforcementSpec:
    return ReinforcementSpec(POWER, exponent=float(exponent), derivative_mode=derivative_mode)


def power_exp(epsilon: float, derivative_mode: str = ANALYTIC) -> ReinforcementSpec:
    return ReinforcementSpec(POWER_EXP, epsilon=float(epsilon), derivative_mode=derivative_mode)


def tabulated(points) -> ReinforcementSpec:
    pts = tuple((float(x), float(y)) for x, y in points)
    return ReinforcementSpec(TABULATED, points=pts)


def from_config(cfg: dict) -> ReinforcementSpec:
    """Build a spec from its JSON form, e.g. ``{"family": "power", "exponent": 2.0}``."""
    family = cfg.get("family")
    deriv = cfg.get("derivative", {})
    mode = deriv.get("mode", ANALYTIC)
    step = float(deriv.get("step", FD_STEP))
    if family == POWER:
        return ReinforcementSpec(POWER, exponent=float(cfg["exponent"]), derivative_mode=mode, fd_step=step)
    if family == POWER_EXP:
        return ReinforcementSpec(POWER_EXP, epsilon=float(cfg["epsilon"]), derivative_mode=mode, fd_step=step)
    if family == TABULATED:
        return tabulated(cfg["points"])
    raise ValueError(f"unknown reinforcement family {family!r}")


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0)) or np.any(~(x <= 1.0)):
        raise ValueError(f"reinforcement functions are defined on [0, 1]; got {x}")
    return x


def evaluate(f: ReinforcementSpec, x):
    """f(x) for scalar or array x in [0, 1]."""
    x = _check_domain(x)
    if f.family == POWER:
        out = np.power(x, f.exponent)
    elif f.family == POWER_EXP:
        out = np.power(x, 2.0 + f.epsilon) * np.exp(1.0 - x)
    else:
        out = f._interp(x)
    return out if out.ndim else float(out)


def _analytic_derivative(f, x):
    if f.family == POWER:
        a = f.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            return a * np.power(x, a - 1.0)
    eps = f.epsilon
    return (2.0 + eps - x) * np.power(x, 1.0 + eps) * np.exp(1.0 - x)


def _fd_derivative(f, x, side):
    h = f.fd_step
    if side == "+":
        fwd = np.ones_like(x, dtype=bool)
        bwd = ~fwd
    elif side == "-":
        bwd = np.ones_like(x, dtype=bool)
        fwd = ~bwd
    else:
        fwd = x < 2 * h
        bwd = x > 1 - 2 * h
    mid = ~(fwd | bwd)
    out = np.empty_like(x)
    if np.any(mid):
        xm = x[mid]
        out[mid] = (evaluate(f, xm + h) - evaluate(f, xm - h)) / (2 * h)
    # second-order one-sided differences near the end points
    if np.any(fwd):
        xl = x[fwd]
        out[fwd] = (-3 * evaluate(f, xl) + 4 * evaluate(f, xl + h) - evaluate(f, xl + 2 * h)) / (2 * h)
    if np.any(bwd):
        xr = x[bwd]
        out[bwd] = (3 * evaluate(f, xr) - 4 * evaluate(f, xr - h) + evaluate(f, xr - 2 * h)) / (2 * h)
    return out


def derivative(f: ReinforcementSpec, x, side: Optional[str] = None):
    """f'(x).

    Interior points need no ``side``. The one-sided limits at the end points
    are requested explicitly with ``derivative(f, 0.0, side="+")`` and
    ``derivative(f, 1.0, side="-")``.

    Raises :class:`ClassRViolation` if the result is not finite.
    """
    x = _check_domain(x)
    if side not in (None, "+", "-"):
        raise ValueError("side must be None, '+' or '-'")
    if side is None and (np.any(x == 0.0) or np.any(x == 1.0)):
        raise ValueError("derivative at 0 or 1 needs side='+' or side='-'")
    if side == "+" and np.any(x >= 1.0):
        raise ValueError("right-sided derivative requested at x=1")
    if side == "-" and np.any(x <= 0.0):
        raise ValueError("left-sided derivative requested at x=0")
    if f.derivative_mode == ANALYTIC:
        out = _analytic_derivative(f, x)
    else:
        out = _fd_derivative(f, np.atleast_1d(x), side).reshape(x.shape)
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ClassRViolation(f"non-finite derivative of {f.family} at x={x}")
    return out if out.ndim else float(out)


def local_alpha(f: ReinforcementSpec, x):
    """x f'(x) / f(x) on (0, 1)."""
    x = np.asarray(x, dtype=float)
    fx = np.asarray(evaluate(f, x))
    if np.any(fx <= 0):
        bad = np.atleast_1d(x)[np.atleast_1d(fx) <= 0][0]
        raise ClassRViolation(f"f({bad}) = 0 for x > 0: f is not strictly increasing away from 0")
    return x * np.asarray(derivative(f, x)) / fx


def _alpha_at_zero(f, grid):
    if f.family == POWER:
        return f.exponent
    if f.family == POWER_EXP:
        return 2.0 + f.epsilon
    return float(local_alpha(f, grid[0]))


def _grid(points=GRID_POINTS):
    return np.linspace(GRID_INSET, 1.0 - GRID_INSET, points)


def alpha_inf(f: ReinforcementSpec, grid_points: int = GRID_POINTS) -> float:
    """inf over (0, 1) of x f'(x) / f(x).

    Exact for the power family; otherwise a grid minimum together with the
    one-sided limits at 0 and 1.
    """
    if f.family == POWER:
        return float(f.exponent)
    grid = _grid(grid_points)
    vals = local_alpha(f, grid)
    at_one = derivative(f, 1.0, side="-") / evaluate(f, 1.0)
    return float(min(vals.min(), _alpha_at_zero(f, grid), at_one))


@dataclass
class ConditionCheck:
    passed: bool
    detail: str = ""
    where: Optional[float] = None


@dataclass
class ClassRReport:
    family: str
    cond_a: ConditionCheck
    cond_b: ConditionCheck
    cond_c: ConditionCheck
    alpha_inf: Optional[float]
    lemma_checks: dict

    @property
    def in_class_r(self) -> bool:
        return self.cond_a.passed and self.cond_b.passed and self.cond_c.passed

    def to_dict(self) -> dict:
        def _c(c):
            return {"passed": bool(c.passed), "detail": c.detail, "where": c.where}
        return {
            "family": self.family,
            "in_class_r": self.in_class_r,
            "cond_a": _c(self.cond_a),
            "cond_b": _c(self.cond_b),
            "cond_c": _c(self.cond_c),
            "alpha_inf": self.alpha_inf,
            "lemma_checks": {k: bool(v) for k, v in self.lemma_checks.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassRReport":
        def _c(c):
            return ConditionCheck(c["passed"], c["detail"], c["where"])
        return cls(d["family"], _c(d["cond_a"]), _c(d["cond_b"]), _c(d["cond_c"]),
                   d["alpha_inf"], dict(d["lemma_checks"]))


def _check_a(f, grid):
    f0, f1 = evaluate(f, 0.0), evaluate(f, 1.0)
    tol = 1e-12 if f.family == TABULATED else 0.0
    if abs(f0) > tol:
        return ConditionCheck(False, f"f(0) = {f0!r}, expected 0", 0.0)
    if abs(f1 - 1.0) > tol:
        return ConditionCheck(False, f"f(1) = {f1!r}, expected 1", 1.0)
    xs = np.concatenate(([0.0], grid, [1.0]))
    fx = evaluate(f, xs)
    if not np.all(np.isfinite(fx)) or np.any(fx < 0):
        i = int(np.argmax(~np.isfinite(fx) | (fx < 0)))
        return ConditionCheck(False, "f not finite and non-negative", float(xs[i]))
    steps = np.diff(fx)
    if np.any(steps < 0):
        i = int(np.argmin(steps))
        return ConditionCheck(False, f"f decreases by {-steps[i]:.3g}", float(xs[i]))
    if np.any(fx[1:] <= 0):
        i = int(np.argmax(fx[1:] <= 0)) + 1
        return ConditionCheck(False, "f vanishes away from 0", float(xs[i]))
    return ConditionCheck(True, "non-decreasing, f(0)=0, f(1)=1")


def _check_b(f, grid):
    try:
        d0 = derivative(f, 0.0, side="+")
        d1 = derivative(f, 1.0, side="-")
        derivative(f, grid)
    except ClassRViolation as exc:
        return ConditionCheck(False, str(exc)), None, None
    return ConditionCheck(True, f"f'(0+)={d0:.6g}, f'(1-)={d1:.6g}"), d0, d1


def _aitken_limit(seq):
    s0, s1, s2 = seq[-3], seq[-2], seq[-1]
    denom = s2 - 2 * s1 + s0
    if abs(denom) < 1e-300:
        return s2
    return s2 - (s2 - s1) ** 2 / denom


def validate_class_r(f: ReinforcementSpec, grid_points: int = GRID_POINTS) -> ClassRReport:
    """Diagnose membership of f in class R. Never raises on a failed condition."""
    grid = _grid(grid_points)
    cond_a = _check_a(f, grid)
    cond_b, d0, _ = _check_b(f, grid)

    alpha = None
    try:
        alpha = alpha_inf(f, grid_points)
    except (ClassRViolation, ValueError) as exc:
        cond_c = ConditionCheck(False, f"alpha_inf unavailable: {exc}")
    else:
        cond_c = ConditionCheck(alpha > 1.0 + ALPHA_TOL, f"alpha_inf = {alpha:.12g}")

    lemmas = {"i": False, "ii": False, "iii": False, "iv": False}
    if cond_b.passed:
        lemmas["i"] = bool(np.all(np.isfinite(derivative(f, grid))))
        xs = 10.0 ** -np.arange(4, 13)
        ratios = np.asarray(evaluate(f, xs)) / xs
        lemmas["ii"] = bool(abs(_aitken_limit(ratios) - d0) <= 1e-6)
    if cond_a.passed:
        ratio = np.asarray(evaluate(f, grid)) / grid
        lemmas["iii"] = bool(np.all(np.diff(ratio) >= -1e-12))
        if alpha is not None:
            xs = np.concatenate((grid, [1.0]))
            lemmas["iv"] = bool(np.all(np.asarray(evaluate(f, xs)) <= xs ** alpha + 1e-9))
    return ClassRReport(f.family, cond_a, cond_b, cond_c, alpha, lemmas)


def antiderivative_over_x(f: ReinforcementSpec, y):
    """Closed form of the integral of f(z)/z over [0, y], or None if unavailable."""
    y = np.asarray(y, dtype=float)
    if f.family == POWER:
        return np.power(y, f.exponent) / f.exponent
    if f.family == POWER_EXP:
        from scipy.special import gamma, gammainc

        s = 2.0 + f.epsilon
        return math.e * gamma(s) * gammainc(s, y)
    return None
