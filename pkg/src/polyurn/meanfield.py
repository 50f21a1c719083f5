"""Deterministic side of the urn: the mean-field vector field
h(y) = f(y) / ||f(y)||_1 - y on the simplex, its zeros, their linear
stability, the flow of y' = h(y) and the Lyapunov function

    F(y) = sum_i integral_0^{y_i} f(z) / z dz,

which increases along every non-stationary trajectory.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, linalg

from . import _kernels
from .reinforce import (ReinforcementSpec, antiderivative_over_x, derivative,
                        evaluate, validate_class_r)

MAX_ENUM_D = 20
EIG_TOL = 1e-8
STOP_TOL = 1e-10
DRIFT_TOL = 1e-6

UNSTABLE = "unstable"
STABLE = "stable"
MARGINAL = "marginal"


class MeanFieldError(ValueError):
    pass


@dataclass(frozen=True)
class MeanFieldModel:
    d: int
    f: ReinforcementSpec
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.check:
            report = validate_class_r(self.f)
            if not report.cond_a.passed:
                raise MeanFieldError(f"f fails condition A: {report.cond_a.detail}")


def _simplex_point(model, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (model.d,):
        raise ValueError(f"expected a point of length {model.d}")
    if np.any(y < -1e-12) or abs(y.sum() - 1.0) > 1e-9:
        raise ValueError(f"{y} is not on the simplex")
    return np.clip(y, 0.0, 1.0)


def h(model: MeanFieldModel, y) -> np.ndarray:
    y = _simplex_point(model, y)
    fy = np.asarray(evaluate(model.f, y), dtype=float)
    s = fy.sum()
    if not s > 0:
        raise MeanFieldError(f"||f(y)||_1 = 0 at y={y.tolist()}")
    return fy / s - y


@dataclass(frozen=True)
class EquilibriumPoint:
    support: tuple
    coordinates: np.ndarray

    @property
    def kind(self) -> str:
        return "trivial" if len(self.support) == 1 else "nontrivial"

    def to_dict(self) -> dict:
        return {"support": list(self.support), "kind": self.kind,
                "coordinates": [float(v) for v in self.coordinates]}


def equilibria(model: MeanFieldModel) -> list[EquilibriumPoint]:
    """Uniform distributions over every nonempty subset of colours (2^d - 1 points)."""
    d = model.d
    if d > MAX_ENUM_D:
        raise MeanFieldError(f"d={d} gives 2^d - 1 equilibria; enumerate by support size instead")
    points = []
    for k in range(1, d + 1):
        for support in itertools.combinations(range(d), k):
            y = np.zeros(d)
            y[list(support)] = 1.0 / k
            res = np.max(np.abs(h(model, y)))
            if not res < 1e-12:
                raise MeanFieldError(f"||h|| = {res:.3g} at candidate equilibrium {y.tolist()}")
            y.setflags(write=False)
            points.append(EquilibriumPoint(support, y))
    return points


def _fprime(f, y):
    out = np.empty_like(y)
    zero, one = y <= 0.0, y >= 1.0
    mid = ~(zero | one)
    if np.any(zero):
        out[zero] = derivative(f, 0.0, side="+")
    if np.any(one):
        out[one] = derivative(f, 1.0, side="-")
    if np.any(mid):
        out[mid] = derivative(f, y[mid])
    return out


def psi_jacobian(model: MeanFieldModel, y) -> np.ndarray:
    """Ambient d x d Jacobian of y -> f(y)/||f(y)||_1, one-sided f' at 0 and 1."""
    y = _simplex_point(model, y)
    fy = np.asarray(evaluate(model.f, y), dtype=float)
    fp = _fprime(model.f, y)
    s = fy.sum()
    if not s > 0:
        raise MeanFieldError(f"||f(y)||_1 = 0 at y={y.tolist()}")
    return np.diag(fp / s) - np.outer(fy, fp) / s ** 2


def tangent_basis(d: int) -> np.ndarray:
    """Orthonormal basis (d x (d-1)) of {v : sum(v) = 0}."""
    return linalg.null_space(np.ones((1, d)))


@dataclass
class StabilityReport:
    point: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    closed_form_checks: list = field(default_factory=list)
    support: Optional[tuple] = None

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def closed_form_ok(self) -> bool:
        return all(abs(c["analytic"] - c["closed_form"]) <= 1e-9 * max(1.0, abs(c["closed_form"]))
                   for c in self.closed_form_checks)

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "support": None if self.support is None else list(self.support),
            "classification": self.classification,
            "eigenvalues_real": [float(v) for v in self.eigenvalues.real],
            "eigenvalues_imag": [float(v) for v in self.eigenvalues.imag],
            "max_real": self.max_real,
            "tangent_jacobian": self.jacobian.tolist(),
            "closed_form_checks": self.closed_form_checks,
            "closed_form_ok": self.closed_form_ok,
        }


def classify(eigenvalues, tol: float = EIG_TOL) -> str:
    re = np.real(eigenvalues)
    if np.any(re > tol):
        return UNSTABLE
    if np.all(re < -tol):
        return STABLE
    return MARGINAL


def _closed_form_checks(model, y, dpsi):
    """Diagonal entries of the reduced Jacobian of Psi against their closed forms.

    Eliminating coordinate r (y_r = 1 - sum of the others), for a support
    coordinate i: if y_r = y_i the entry equals alpha(y_i) = y_i f'(y_i)/f(y_i);
    if y_r = 0 it equals alpha(y_i) - f(y_i)(f'(y_i) - f'(0+)) / ||f(y)||^2.
    """
    f = model.f
    support = np.flatnonzero(y > 0)
    zeros = np.flatnonzero(y == 0)
    fy = np.asarray(evaluate(f, y), dtype=float)
    s = fy.sum()
    checks = []
    for i in support:
        a_i = y[i] * _fprime(f, y[i:i + 1])[0] / fy[i]
        others = [r for r in support if r != i]
        if others:
            r = others[-1]
            checks.append({"coordinate": int(i), "eliminated": int(r), "case": "equal",
                           "analytic": float(dpsi[i, i] - dpsi[i, r]), "closed_form": float(a_i)})
        if zeros.size:
            r = zeros[-1]
            fp0 = derivative(f, 0.0, side="+")
            fpi = _fprime(f, y[i:i + 1])[0]
            cf = a_i - fy[i] * (fpi - fp0) / s ** 2
            checks.append({"coordinate": int(i), "eliminated": int(r), "case": "zero",
                           "analytic": float(dpsi[i, i] - dpsi[i, r]), "closed_form": float(cf)})
    return checks


def jacobian(model: MeanFieldModel, y, tol: float = EIG_TOL) -> StabilityReport:
    """Jacobian of h restricted to the simplex tangent space, with its spectrum.

    At equilibria the diagonal of the reduced Jacobian is cross-checked
    against closed forms (see ``closed_form_checks`` on the report).
    """
    y = _simplex_point(model, y)
    dpsi = psi_jacobian(model, y)
    J = dpsi - np.eye(model.d)
    Q = tangent_basis(model.d)
    Jt = Q.T @ J @ Q
    eig = np.linalg.eigvals(Jt)
    eig = eig[np.lexsort((eig.imag, -eig.real))]
    checks = []
    support = None
    hv = h(model, y)
    if np.max(np.abs(hv)) < 1e-12:
        support = tuple(int(i) for i in np.flatnonzero(y > 0))
        checks = _closed_form_checks(model, y, dpsi)
    return StabilityReport(y, Jt, eig, classify(eig, tol), checks, support)


@dataclass
class FlowTrajectory:
    times: np.ndarray
    ys: np.ndarray
    F: np.ndarray
    stopped_early: bool

    @property
    def final(self) -> np.ndarray:
        return self.ys[-1]


def flow(model: MeanFieldModel, y0, T: float = 200.0, dt: float = 0.01,
         stop_tol: float = STOP_TOL, with_lyapunov: bool = True) -> FlowTrajectory:
    """Integrate y' = h(y) from y0 with RK4, projecting back onto the simplex
    after every step. Stops early once ||h||_inf < stop_tol."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    y0 = _simplex_point(model, y0)
    y0 = y0 / y0.sum()
    n_max = int(np.ceil(T / dt - 1e-9))
    code, params, breaks, coefs = model.f.kernel_params()
    status, n, ys = _kernels.rk4_flow(code, params, breaks, coefs, y0, float(dt), n_max,
                                      float(stop_tol), DRIFT_TOL)
    if status == 2:
        raise MeanFieldError(f"sum drift above {DRIFT_TOL} at step {n}; reduce dt (currently {dt})")
    if status == 3:
        raise MeanFieldError(f"||f(y)||_1 = 0 along the flow at step {n}")
    ys = ys[:n + 1]
    times = dt * np.arange(n + 1)
    F = lyapunov_F(model, ys) if with_lyapunov else np.full(n + 1, np.nan)
    return FlowTrajectory(times, ys, F, status == 1)


def _coordinate_integral(f, y, fp0, atol):
    def integrand(z):
        return fp0 if z <= 0 else evaluate(f, z) / z
    val, err = integrate.quad(integrand, 0.0, y, epsabs=atol, epsrel=0.0, limit=200)
    if not err <= atol:
        raise MeanFieldError(f"quadrature did not converge for coordinate value {y} (error {err:.3g})")
    return val


def lyapunov_F_quad(model: MeanFieldModel, y, atol: float = 1e-10) -> float:
    """F(y) by adaptive quadrature, the integrand continued at 0 by f'(0+)."""
    y = _simplex_point(model, y)
    fp0 = derivative(model.f, 0.0, side="+")
    total = 0.0
    for i, yi in enumerate(y):
        try:
            total += _coordinate_integral(model.f, yi, fp0, atol)
        except MeanFieldError as exc:
            raise MeanFieldError(f"coordinate {i}: {exc}") from None
    return total


def lyapunov_F(model: MeanFieldModel, y):
    """F(y) for one point or a stack of points (rows).

    Closed forms are used for the built-in families, quadrature otherwise.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        closed = antiderivative_over_x(model.f, np.clip(y, 0.0, 1.0))
        return float(closed.sum()) if closed is not None else lyapunov_F_quad(model, y)
    closed = antiderivative_over_x(model.f, np.clip(y, 0.0, 1.0))
    if closed is not None:
        return closed.sum(axis=1)
    return np.array([lyapunov_F_quad(model, row) for row in y])


def random_starts(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points drawn uniformly from the simplex (Dirichlet(1, ..., 1))."""
    return rng.dirichlet(np.ones(d), size=n)


def nearest_equilibrium(points: list[EquilibriumPoint], y) -> tuple[EquilibriumPoint, float]:
    y = np.asarray(y, dtype=float)
    dists = [float(np.linalg.norm(y - p.coordinates)) for p in points]
    i = int(np.argmin(dists))
    return points[i], dists[i]
