"""Singular times, error-order fits and residual scaling of the multiscale generators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import quad

from . import exact
from .errors import GridMismatch, ProbePastPole, RegimeViolation
from .generators import GeneratorKind, _ms2_frequency, generator
from .model import PhysicalParams, make_params
from .tcl_solver import Trajectory

DEFAULT_EPS_GRID = (0.1, 0.05, 0.02, 0.01, 0.005, 0.002)
DEFAULT_RESIDUAL_EPS_GRID = (0.2, 0.1, 0.05, 0.02, 0.01)


def singular_time(kind, params: PhysicalParams, n: int = 0) -> float:
    """``n``-th pole of the generator from its closed-form first singular time.

    Later poles follow from the period of each generator's trigonometric
    argument.  Kept separate from :func:`nmtcl.generators.poles` so the two
    code paths can be checked against each other.
    """
    kind = GeneratorKind(kind)
    if n < 0:
        raise ValueError("pole index must be >= 0")
    g0, eps = params.gamma0, params.eps
    if kind is GeneratorKind.EXACT:
        G = exact.rabi_rate(params)
        first = 2.0 * math.acos(-math.sqrt(eps / 2.0)) / (g0 * math.sqrt((2.0 - eps) * eps))
        return first + n * 2.0 * math.pi / G
    if not params.is_strong:
        raise RegimeViolation(f"{kind.value} poles need gamma0 > lambda/2")
    if kind is GeneratorKind.MULTISCALE1:
        return (2 * n + 1) * math.pi / (g0 * math.sqrt(2.0 * eps))
    if kind is GeneratorKind.MULTISCALE2:
        first = 4.0 * math.sqrt(2.0) * math.acos(-math.sqrt(eps / (2.0 + eps))) / (
            g0 * (4.0 - eps) * math.sqrt(eps)
        )
        return first + n * math.pi / (_ms2_frequency(eps) * g0)
    raise ValueError(f"{kind.value} generator has no poles")


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r_squared: float


def loglog_fit(x, y) -> LogLogFit:
    """Ordinary least squares of ``log y`` on ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("a log-log fit needs at least three points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    res = stats.linregress(np.log(x), np.log(y))
    return LogLogFit(float(res.slope), float(res.intercept), float(res.rvalue**2))


@dataclass(frozen=True)
class ErrorOrderReport:
    eps_grid: np.ndarray
    t0_exact: np.ndarray
    t0_ms1: np.ndarray
    t0_ms2: np.ndarray
    rel_errors_ms1: np.ndarray
    rel_errors_ms2: np.ndarray
    fitted_slope_ms1: float
    fitted_slope_ms2: float
    r_squared_ms1: float
    r_squared_ms2: float


def _check_eps_grid(eps_grid) -> np.ndarray:
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size < 3:
        raise ValueError("need at least three eps values for a fit")
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")
    if np.any(eps >= 2.0):
        raise RegimeViolation("eps >= 2 is not strong coupling")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps grid must be strictly decreasing")
    return eps


def error_order_study(eps_grid=DEFAULT_EPS_GRID, gamma0: float = 1.0) -> ErrorOrderReport:
    """Relative error of the multiscale first singular times against the exact one.

    Each point uses ``lambda = eps * gamma0``; the relative errors depend on
    ``eps`` alone.
    """
    eps = _check_eps_grid(eps_grid)
    t_ex, t_1, t_2 = [], [], []
    for e in eps:
        p = make_params(gamma0, e * gamma0)
        t_ex.append(singular_time(GeneratorKind.EXACT, p))
        t_1.append(singular_time(GeneratorKind.MULTISCALE1, p))
        t_2.append(singular_time(GeneratorKind.MULTISCALE2, p))
    t_ex, t_1, t_2 = map(np.array, (t_ex, t_1, t_2))
    err1 = np.abs(t_1 - t_ex) / t_ex
    err2 = np.abs(t_2 - t_ex) / t_ex
    f1 = loglog_fit(eps, err1)
    f2 = loglog_fit(eps, err2)
    return ErrorOrderReport(eps, t_ex, t_1, t_2, err1, err2, f1.slope, f2.slope, f1.r_squared, f2.r_squared)


@dataclass(frozen=True)
class ResidualReport:
    order: object
    eps_grid: np.ndarray
    T_probe: float
    residuals: np.ndarray
    fitted_power: float
    r_squared: float
    pairwise_powers: np.ndarray

    @property
    def pairwise_spread(self) -> float:
        return float(np.ptp(self.pairwise_powers))


_ORDER_KINDS = {1: GeneratorKind.MULTISCALE1, 2: GeneratorKind.MULTISCALE2, "exact": GeneratorKind.EXACT}


def approximate_amplitude(order, eps: float, T: float, c_e0: float = 1.0) -> float:
    """``c_e0 * exp(-1/2 int_0^T gamma/gamma0 dT')`` for an order-``order`` generator.

    Order 0 is the unperturbed generator (``gamma = 0``, ``c = c_e0``); orders
    1 and 2 are the multiscale generators; ``"exact"`` uses the exact rate.
    Valid only before the generator's first pole.
    """
    if order == 0:
        return c_e0
    params = make_params(1.0, eps)  # gamma0 = 1, so t is T
    rate = generator(_ORDER_KINDS[order], params).rate
    integral = quad(lambda s: float(rate(s)), 0.0, T, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return c_e0 * math.exp(-0.5 * integral)


def _first_pole_T(order, eps: float) -> float:
    if order == 0:
        return math.inf
    return singular_time(_ORDER_KINDS[order], make_params(1.0, eps))


def ode_residual(order, eps: float, T_probe: float, h: float = 0.05) -> float:
    """``|c'' + eps c' + eps/2 c|`` at ``T_probe`` by fourth-order central differences."""
    if T_probe - 2 * h <= 0 or T_probe + 2 * h >= _first_pole_T(order, eps):
        raise ProbePastPole(f"T_probe={T_probe} with stencil 2h={2 * h} leaves (0, first pole) at eps={eps}")
    c = [approximate_amplitude(order, eps, T_probe + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (c[0] - 8 * c[1] + 8 * c[3] - c[4]) / (12 * h)
    d2 = (-c[0] + 16 * c[1] - 30 * c[2] + 16 * c[3] - c[4]) / (12 * h * h)
    return abs(d2 + eps * d1 + 0.5 * eps * c[2])


def residual_order_check(order, eps_grid=DEFAULT_RESIDUAL_EPS_GRID, T_probe: float = 1.0, h: float = 0.05) -> ResidualReport:
    """Fit ``residual ~ eps**p`` for the amplitude rebuilt from an order's generator."""
    if order not in (0, 1, 2, "exact"):
        raise ValueError(f"order must be 0, 1, 2 or 'exact', got {order!r}")
    eps = _check_eps_grid(eps_grid)
    res = np.array([ode_residual(order, e, T_probe, h) for e in eps])
    if order == "exact" or np.any(res == 0):
        # at the difference-noise floor a power law is meaningless
        return ResidualReport(order, eps, T_probe, res, math.nan, math.nan, np.full(eps.size - 1, math.nan))
    fit = loglog_fit(eps, res)
    pair = np.diff(np.log(res)) / np.diff(np.log(eps))
    return ResidualReport(order, eps, T_probe, res, fit.slope, fit.r_squared, pair)


@dataclass(frozen=True)
class TrajectoryDiff:
    """Differences of ``rho_ee`` and of ``|rho_eg|`` between two trajectories."""

    sup_norm: float
    l2: float
    per_point: np.ndarray
    coherence_sup_norm: float
    coherence_l2: float
    coherence_per_point: np.ndarray


def compare_trajectories(a: Trajectory, b: Trajectory) -> TrajectoryDiff:
    if a.grid != b.grid:
        raise GridMismatch("trajectories are sampled on different grids")
    t = a.grid.points
    d = np.abs(np.asarray(a.rho_ee) - np.asarray(b.rho_ee))
    dc = np.abs(np.abs(a.rho_eg) - np.abs(b.rho_eg))

    def l2(x):
        return float(math.sqrt(np.trapezoid(x**2, t))) if t.size > 1 else 0.0

    return TrajectoryDiff(float(d.max()), l2(d), d, float(dc.max()), l2(dc), dc)


def count_local_minima(y, floor: float | None = None) -> int:
    """Strict interior local minima of a sampled curve (optionally only those below ``floor``)."""
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        return 0
    mid = y[1:-1]
    is_min = (mid < y[:-2]) & (mid <= y[2:])
    if floor is not None:
        is_min &= mid < floor
    return int(is_min.sum())


def is_nonincreasing(y, tol: float = 0.0) -> bool:
    return bool(np.all(np.diff(np.asarray(y, dtype=float)) <= tol))
