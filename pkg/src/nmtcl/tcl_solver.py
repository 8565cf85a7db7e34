"""Deterministic integration of the TCL master equation through generator poles.

For a qubit with amplitude damping and a Lamb shift the master equation
reduces to

    d rho_ee / dt = -gamma(t) rho_ee
    d rho_eg / dt = -(gamma(t) + i S(t)) / 2 * rho_eg

with ``rho_gg = 1 - rho_ee``.  The system is diagonal and linear, so the
solvers propagate the cumulative exponents ``A(t) = int gamma`` and
``B(t) = int S`` and rebuild the state as

    rho_ee(t) = rho_ee(0) exp(-A),   rho_eg(t) = sign(t) rho_eg(0) exp(-(A + iB)/2).

Working with exponents keeps relative accuracy when the population drops to
1e-7 next to a pole and then regrows by orders of magnitude.

Near a pole ``t*`` with residue ``r`` (``r = -2`` at a simple zero of c_e),
``gamma = r/(t - t*) + g(t)`` with ``g`` smooth, and

    exp(-int_{t*-d}^{t} gamma) = (|t - t*|/d)^(-r) * exp(-int_{t*-d}^{t} g).

The coherence picks up a sign flip at every simple zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import PoleAtGridEnd, PositivityBreach
from .generators import Generator, generator
from .model import InitialState, PhysicalParams, QubitState, TimeGrid


# local step tolerances sit a decade below the requested state accuracy
_LOCAL_SAFETY = 0.1


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances and pole-window width.

    ``abs_tol``/``rel_tol`` are accuracy targets for the returned state; the
    RK45 local error control runs a decade tighter so the accumulated error
    stays inside them.

    ``pole_window`` is the half-width ``d`` of the subtraction window around
    each pole; ``None`` means ``1e-3 * generator.time_scale`` (``1e-3/Gamma``
    for the exact generator).
    """

    pole_window: Optional[float] = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_step: float = np.inf

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.pole_window is not None and self.pole_window <= 0:
            raise ValueError("pole_window must be positive")

    def window_for(self, gen: Generator) -> float:
        return 1e-3 * gen.time_scale if self.pole_window is None else self.pole_window


@dataclass(frozen=True)
class PoleCrossing:
    pole: float
    window: float
    regular_integral: float
    rho_ee_after: float
    rho_eg_after: complex


@dataclass(eq=False)
class Trajectory:
    """Reduced state sampled on a grid.

    ``rho_ee_se``/``rho_eg_se`` carry Monte Carlo standard errors when the
    trajectory comes from an ensemble solver and are ``None`` otherwise.
    """

    grid: TimeGrid
    rho_ee: np.ndarray
    rho_eg: np.ndarray
    crossings: tuple = ()
    positivity_ok: bool = True
    rho_ee_se: Optional[np.ndarray] = None
    rho_eg_se: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.grid.points

    @property
    def rho_gg(self) -> np.ndarray:
        return 1.0 - self.rho_ee

    def states(self) -> list[QubitState]:
        return [QubitState(float(a), complex(b)) for a, b in zip(self.rho_ee, self.rho_eg)]

    def __len__(self):
        return self.grid.n_points


def _flips_sign(residue) -> bool:
    # c_e ~ (t - t*)^(-r/2): odd integer powers change sign
    if residue is None:
        return False
    half = -residue / 2.0
    return half == round(half) and int(round(half)) % 2 == 1


def _check_poles(gen: Generator, grid: TimeGrid, d: float) -> np.ndarray:
    horizon = grid.t_end
    pole_list = gen.poles(horizon + d)
    if pole_list.size and gen.residue is None:
        raise ValueError(f"generator {gen.name!r} declares poles but no residue")
    if pole_list.size > 1 and np.min(np.diff(pole_list)) <= 2 * d:
        raise ValueError("pole windows overlap; reduce pole_window")
    if pole_list.size and pole_list[0] - d <= 0.0:
        raise ValueError("first pole window reaches t = 0; reduce pole_window")
    for p in pole_list:
        if abs(horizon - p) < d:
            raise PoleAtGridEnd(f"grid end t={horizon!r} lies inside the window of pole {p!r}")
    return pole_list


def _assemble(gen, grid, initial, A, B, flips, abs_tol, crossings=()):
    """State from cumulative exponents; ``A = inf`` marks a point exactly at a pole."""
    with np.errstate(over="ignore"):
        decay = np.exp(-A)
        coh = np.exp(-0.5 * A - 0.5j * B)
    rho_ee = initial.rho_ee * decay
    rho_eg = initial.rho_eg * np.where(flips % 2 == 1, -1.0, 1.0) * coh
    rho_eg = np.where(np.isinf(A), 0.0, rho_eg)
    ok = bool(
        np.all(rho_ee >= -100 * abs_tol)
        and np.all(rho_ee <= 1.0 + 10 * abs_tol)
        and np.all(np.abs(rho_eg) ** 2 <= rho_ee * (1.0 - rho_ee) + 10 * abs_tol)
    )
    if not ok:
        warnings.warn(
            f"generator {gen.name!r} drove the state outside the physical set",
            PositivityBreach,
            stacklevel=3,
        )
    return Trajectory(grid, rho_ee, rho_eg, tuple(crossings), ok)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _gauss_legendre(f, a: float, b: float, breaks=(), panel: float = np.inf) -> float:
    """Composite 16-point Gauss-Legendre rule for a vectorised smooth ``f``.

    ``breaks`` are interior points the panels must not straddle (poles whose
    singular part has been subtracted); nodes never land on them.
    """
    if b <= a:
        return 0.0
    edges = [a] + sorted(x for x in breaks if a < x < b) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = max(1, int(math.ceil((hi - lo) / panel)))
        cuts = np.linspace(lo, hi, m + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        nodes = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
        vals = np.asarray(f(nodes), dtype=float).reshape(m, -1)
        total += float(np.sum(half * (vals @ _GL_WEIGHTS)))
    return total


def _subtracted(gen: Generator, pole_list, residue):
    """``gamma(s) - residue * sum_p 1/(s - p)``, vectorised in ``s``."""
    pole_list = np.atleast_1d(np.asarray(pole_list, dtype=float))

    def G(s):
        s = np.asarray(s, dtype=float)
        out = np.asarray(gen.rate(s), dtype=float)
        if pole_list.size:
            out = out - residue * np.sum(1.0 / (s[..., None] - pole_list), axis=-1)
        return out

    return G


def _shift_integral(gen: Generator, a: float, b: float, panel: float) -> float:
    return _gauss_legendre(lambda s: np.broadcast_to(gen.shift(s), np.shape(s)), a, b, panel=panel)


def solve_tcl(kind, params: PhysicalParams, initial: InitialState, grid: TimeGrid, opts: SolveOptions = SolveOptions()) -> Trajectory:
    """Adaptive RK45 between poles, analytic pole subtraction across them.

    Inside a regular segment RK45 integrates ``gamma`` minus the singular
    parts of the two bounding poles, which are added back as logarithms;
    the integrand then stays smooth up to the window edges.  The initial
    state is posed at ``t = 0``; the grid may start later.
    """
    gen = generator(kind, params)
    d = opts.window_for(gen)
    pole_list = _check_poles(gen, grid, d)
    r = gen.residue
    flip = _flips_sign(r)
    panel = 0.05 * gen.time_scale
    t_out = grid.points
    A = np.zeros(t_out.size)
    B = np.zeros(t_out.size)
    flips = np.zeros(t_out.size, dtype=int)

    a_now, b_now, n_flips = 0.0, 0.0, 0
    seg_start = 0.0
    prev_pole = None
    crossings = []
    # the pole after the horizon still shapes gamma near the grid end
    upcoming = gen.poles(t_out[-1] + 2 * math.pi * gen.time_scale) if r is not None else np.empty(0)
    bounds = [(p - d, p) for p in pole_list] + [(t_out[-1], None)]
    for seg_end, pole in bounds:
        nxt = pole
        if nxt is None and upcoming.size > len(pole_list):
            nxt = upcoming[len(pole_list)]
        near = [p for p in (prev_pole, nxt) if p is not None]
        G = _subtracted(gen, near, r if near else 0.0)

        def log_part(t, near=near, start=seg_start):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            for p in near:
                out += r * np.log(np.abs(t - p) / abs(start - p))
            return out

        def rhs(t, y, G=G):
            return [float(G(t)), float(gen.shift(t))]

        mask = (t_out >= seg_start) & (t_out <= seg_end)
        if seg_end > seg_start:
            sol = solve_ivp(
                rhs,
                (seg_start, seg_end),
                [0.0, 0.0],
                method="RK45",
                rtol=_LOCAL_SAFETY * opts.rel_tol,
                atol=_LOCAL_SAFETY * opts.abs_tol,
                max_step=opts.max_step,
                dense_output=True,
            )
            if not sol.success:
                raise RuntimeError(f"RK45 failed on [{seg_start}, {seg_end}]: {sol.message}")
            if mask.any():
                vals = sol.sol(t_out[mask])
                A[mask] = a_now + vals[0] + log_part(t_out[mask])
                B[mask] = b_now + vals[1]
            a_now += sol.y[0, -1] + float(log_part(seg_end))
            b_now += sol.y[1, -1]
        else:
            A[mask], B[mask] = a_now, b_now
        flips[mask] = n_flips
        if pole is None:
            break

        # pole window [pole - d, pole + d]
        g = _subtracted(gen, [pole], r)
        inside = (t_out > pole - d) & (t_out < pole + d)
        for i in np.flatnonzero(inside):
            t = t_out[i]
            if t == pole:
                A[i] = np.inf
            else:
                A[i] = a_now + r * math.log(abs(t - pole) / d) + _gauss_legendre(g, pole - d, t, [pole], panel)
            B[i] = b_now + _shift_integral(gen, pole - d, t, panel)
            flips[i] = n_flips + (1 if (flip and t > pole) else 0)
        reg = _gauss_legendre(g, pole - d, pole + d, [pole], panel)
        a_now += reg
        b_now += _shift_integral(gen, pole - d, pole + d, panel)
        n_flips += 1 if flip else 0
        sign = -1.0 if n_flips % 2 else 1.0
        crossings.append(
            PoleCrossing(
                pole=float(pole),
                window=d,
                regular_integral=reg,
                rho_ee_after=initial.rho_ee * math.exp(-a_now),
                rho_eg_after=initial.rho_eg * sign * complex(np.exp(-0.5 * a_now - 0.5j * b_now)),
            )
        )
        seg_start = pole + d
        prev_pole = pole
    return _assemble(gen, grid, initial, A, B, flips, opts.abs_tol, crossings)


class BranchPropagator:
    """Cumulative exponents of the deterministic propagator, by quadrature.

    Subtracts every pole's singular part globally,
    ``G(s) = gamma(s) - r * sum_p 1/(s - p)``, integrates the smooth ``G``
    with composite Gauss-Legendre and adds back ``r * sum_p ln(|t - p|/p)``
    in closed form.  Times passed to :meth:`advance` must be nondecreasing.
    """

    def __init__(self, gen: Generator, horizon: float):
        self.gen = gen
        # poles just past the horizon are subtracted too, so G stays smooth up to it
        self.pole_list = gen.poles(horizon + 2 * math.pi * gen.time_scale)
        self.r = gen.residue if self.pole_list.size else 0.0
        self.flip = _flips_sign(gen.residue)
        self.panel = 0.05 * gen.time_scale
        self._G = _subtracted(gen, self.pole_list, self.r)
        self.t = 0.0
        self._int_G = 0.0
        self._int_S = 0.0

    def peek(self, t: float):
        """Like :meth:`advance` but leaves the propagator where it was."""
        if t < self.t:
            raise ValueError("BranchPropagator only moves forward in time")
        int_G = self._int_G + _gauss_legendre(self._G, self.t, t, self.pole_list, self.panel)
        int_S = self._int_S + _shift_integral(self.gen, self.t, t, self.panel)
        return self._finish(t, int_G, int_S)

    def advance(self, t: float):
        """Return ``(A, B, flips)`` at ``t``; ``A = inf`` exactly at a pole."""
        if t < self.t:
            raise ValueError("BranchPropagator only moves forward in time")
        if t > self.t:
            self._int_G += _gauss_legendre(self._G, self.t, t, self.pole_list, self.panel)
            self._int_S += _shift_integral(self.gen, self.t, t, self.panel)
            self.t = t
        return self._finish(t, self._int_G, self._int_S)

    def at(self, t: float):
        """Exponents at any ``t``, integrating afresh from 0."""
        int_G = _gauss_legendre(self._G, 0.0, t, self.pole_list, self.panel)
        int_S = _shift_integral(self.gen, 0.0, t, self.panel)
        return self._finish(t, int_G, int_S)

    def _finish(self, t, int_G, int_S):
        p = self.pole_list
        flips = int(np.sum(p < t)) if self.flip else 0
        if p.size and np.any(p == t):
            return math.inf, int_S, flips
        log_poles = float(np.sum(np.log(np.abs(t - p) / p))) if p.size else 0.0
        return int_G + self.r * log_poles, int_S, flips

    def amplitude_factor(self, exps) -> complex:
        """``c_e(t)/c_e(0)`` from the exponents returned by advance/peek/at."""
        A, B, flips = exps
        if math.isinf(A):
            return 0.0j
        return (-1.0) ** flips * complex(np.exp(-0.5 * A - 0.5j * B))


def solve_tcl_quadrature(kind, params: PhysicalParams, initial: InitialState, grid: TimeGrid, opts: SolveOptions = SolveOptions()) -> Trajectory:
    """Closed-form propagation ``rho_ee(t) = rho_ee(0) exp(-int_0^t gamma)``.

    The integral is regularised by global pole subtraction (see
    :class:`BranchPropagator`); no step control is involved, which makes
    this an independent check on :func:`solve_tcl`.
    """
    gen = generator(kind, params)
    d = opts.window_for(gen)
    _check_poles(gen, grid, d)
    prop = BranchPropagator(gen, grid.t_end)
    n = grid.n_points
    A = np.empty(n)
    B = np.empty(n)
    flips = np.empty(n, dtype=int)
    for i, t in enumerate(grid.points):
        A[i], B[i], flips[i] = prop.advance(float(t))
    return _assemble(gen, grid, initial, A, B, flips, opts.abs_tol)


def in_pole_windows(gen_or_kind, params: PhysicalParams, t, window: float, horizon: float | None = None) -> np.ndarray:
    """Boolean mask of times lying within ``window`` of any pole."""
    gen = generator(gen_or_kind, params)
    t = np.asarray(t, dtype=float)
    horizon = float(t.max()) + window if horizon is None else horizon
    ps = gen.poles(horizon)
    if ps.size == 0:
        return np.zeros(t.shape, dtype=bool)
    return np.min(np.abs(t[..., None] - ps), axis=-1) <= window
