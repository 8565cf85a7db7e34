"""Amplitude solvers that do not use the closed form.

Two independent routes to ``c_e(t)``:

* :func:`solve_volterra` discretises the memory equation
  ``dc/dt = -int_0^t f(t - s) c(s) ds`` with trapezoidal product integration
  for any even kernel ``f``;
* :func:`solve_amplitude_ode` integrates the equivalent local equation
  ``c'' + lam c' + gamma0 lam / 2 c = 0`` (Lorentzian kernel only) with
  classical RK4.

:func:`generator_from_amplitude` turns a sampled amplitude back into
``(S, gamma)`` with central differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateAmplitude, StepTooLarge
from .model import InitialState, PhysicalParams, TimeGrid


@dataclass(frozen=True)
class ExponentialKernel:
    """``f(s) = amplitude * exp(-rate*|s|)``; ``rate = 0`` gives a constant kernel.

    Tagged separately from plain callables so the solver can update the
    history sum recursively in O(1) per step.
    """

    amplitude: float
    rate: float

    def __call__(self, s):
        return self.amplitude * np.exp(-self.rate * np.abs(np.asarray(s, dtype=float)))


def lorentzian_kernel(params: PhysicalParams) -> ExponentialKernel:
    return ExponentialKernel(0.5 * params.gamma0 * params.lam, params.lam)


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    grid: TimeGrid
    values: np.ndarray
    initial: InitialState

    @property
    def t(self) -> np.ndarray:
        return self.grid.points


def _uniform_step(grid: TimeGrid) -> float:
    try:
        return grid.step
    except ValueError:
        raise ValueError("amplitude solvers need a uniform grid") from None


def solve_volterra(
    kernel: Callable,
    initial: InitialState,
    grid: TimeGrid,
    scheme: str = "trapezoid",
) -> AmplitudeTrajectory:
    """Trapezoidal product integration of the amplitude memory equation.

    Both the time stepping and the history integral use the trapezoidal
    rule, which gives a second-order scheme.  The grid must be uniform and
    start at ``t = 0`` (the memory integral runs from the preparation time).
    """
    if scheme != "trapezoid":
        raise ValueError(f"unknown scheme {scheme!r}; only 'trapezoid' is available")
    if grid.t_start != 0.0:
        raise ValueError("the memory integral starts at t = 0; the grid must too")
    n = grid.n_points
    h = _uniform_step(grid) if n > 1 else 0.0
    c = np.empty(n, dtype=complex)
    c[0] = initial.c_e0
    if n == 1:
        return AmplitudeTrajectory(grid, c, initial)

    if isinstance(kernel, ExponentialKernel):
        f0 = kernel.amplitude
        sup = abs(kernel.amplitude)
    else:
        fvals = np.asarray(kernel(h * np.arange(n)), dtype=complex)
        f0 = fvals[0]
        sup = np.abs(fvals).max()
    if h * sup >= 1.0:
        raise StepTooLarge(f"h * sup|f| = {h * sup:.3g} >= 1; refine the grid")

    denom = 1.0 + 0.25 * h * h * f0
    F = 0.0 + 0.0j  # dc/dt at the current node
    if isinstance(kernel, ExponentialKernel):
        decay = np.exp(-kernel.rate * h)
        a = kernel.amplitude
        Q = 0.5 * c[0]  # sum_j w_j exp(-rate (t_n - t_j)) c_j
        for k in range(n - 1):
            P = a * decay * Q
            c[k + 1] = (c[k] + 0.5 * h * F - 0.5 * h * h * P) / denom
            F = -h * (P + 0.5 * f0 * c[k + 1])
            Q = decay * Q + c[k + 1]
    else:
        for k in range(n - 1):
            P = 0.5 * fvals[k + 1] * c[0] + np.dot(fvals[k:0:-1], c[1 : k + 1])
            c[k + 1] = (c[k] + 0.5 * h * F - 0.5 * h * h * P) / denom
            F = -h * (P + 0.5 * f0 * c[k + 1])
    return AmplitudeTrajectory(grid, c, initial)


def solve_amplitude_ode(params: PhysicalParams, initial: InitialState, grid: TimeGrid) -> AmplitudeTrajectory:
    """RK4 for ``c'' + lam c' + gamma0 lam/2 c = 0`` with ``c(0)=c_e0``, ``c'(0)=0``.

    Valid in every coupling regime.  For this linear system one RK4 step is
    the fixed matrix ``sum_k (hA)^k / k!`` (k <= 4), applied repeatedly.
    """
    if grid.t_start != 0.0:
        raise ValueError("initial conditions are posed at t = 0; the grid must start there")
    n = grid.n_points
    c = np.empty(n, dtype=complex)
    c[0] = initial.c_e0
    if n == 1:
        return AmplitudeTrajectory(grid, c, initial)
    h = _uniform_step(grid)
    A = np.array([[0.0, 1.0], [-0.5 * params.gamma0 * params.lam, -params.lam]])
    hA = h * A
    step = np.eye(2)
    term = np.eye(2)
    for k in range(1, 5):
        term = term @ hA / k
        step = step + term
    y = np.array([initial.c_e0, 0.0], dtype=complex)
    for k in range(1, n):
        y = step @ y
        c[k] = y[0]
    return AmplitudeTrajectory(grid, c, initial)


@dataclass(frozen=True, eq=False)
class GeneratorSeries:
    """Generator samples on a grid.  ``near_pole`` marks points where the
    amplitude fell below the floor; their ``s`` and ``gamma`` are NaN."""

    t: np.ndarray
    s: np.ndarray
    gamma: np.ndarray
    near_pole: np.ndarray


def generator_from_amplitude(traj: AmplitudeTrajectory, floor: float = 1e-8) -> GeneratorSeries:
    """``S = -2 Im(c'/c)`` and ``gamma = -2 Re(c'/c)`` by central differences.

    ``floor`` is relative to ``|c_e0|``.
    """
    scale = abs(traj.initial.c_e0)
    if scale == 0.0:
        raise DegenerateAmplitude("c_e0 = 0: the generator is undefined everywhere")
    t = traj.grid.points
    c = traj.values
    if c.size < 3:
        raise ValueError("need at least three samples for central differences")
    dc = np.gradient(c, t, edge_order=2)
    near = np.abs(c) < floor * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(near, np.nan, dc / np.where(near, 1.0, c))
    return GeneratorSeries(t=t, s=-2.0 * ratio.imag, gamma=-2.0 * ratio.real, near_pole=near)
