"""Closed-form strong-coupling solution for the resonant Lorentzian bath.

With ``Gamma = sqrt(2*gamma0*lam - lam**2)`` the excited amplitude is

    c_e(t) = c_e0 * exp(-lam*t/2) * [cos(Gamma*t/2) + lam/Gamma * sin(Gamma*t/2)]

and the TCL decay rate follows from ``gamma = -2 Re(dc_e/dt / c_e)``:

    gamma(t) = 2*gamma0*lam*sin(Gamma*t/2) / (Gamma*cos(Gamma*t/2) + lam*sin(Gamma*t/2))

The rate is evaluated in this factored form, never through ``tan``, because
``tan(Gamma*t/2)`` blows up at points where ``gamma`` itself is regular.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AtPole, NotStrongCoupling
from .model import InitialState, PhysicalParams, density_from_amplitudes

DEFAULT_POLE_GUARD = 1e-9  # in units of 1/Gamma


def rabi_rate(params: PhysicalParams) -> float:
    disc = 2.0 * params.gamma0 * params.lam - params.lam**2
    if disc <= 0:
        raise NotStrongCoupling(
            f"Gamma^2 = {disc!r} <= 0 for gamma0={params.gamma0}, lambda={params.lam}"
        )
    return math.sqrt(disc)


def _envelope_parts(params, t):
    G = rabi_rate(params)
    t = np.asarray(t, dtype=float)
    half = 0.5 * G * t
    return G, t, np.cos(half), np.sin(half)


def amplitude_exact(params: PhysicalParams, initial: InitialState, t):
    G, t, c, s = _envelope_parts(params, t)
    out = np.asarray(initial.c_e0 * np.exp(-0.5 * params.lam * t) * (c + params.lam / G * s))
    return complex(out) if out.ndim == 0 else out


def amplitude_derivative_exact(params: PhysicalParams, initial: InitialState, t):
    """Time derivative of :func:`amplitude_exact`, ``-c_e0*gamma0*lam/Gamma * exp(-lam t/2) sin``."""
    G, t, _, s = _envelope_parts(params, t)
    out = np.asarray(-initial.c_e0 * params.gamma0 * params.lam / G * np.exp(-0.5 * params.lam * t) * s)
    return complex(out) if out.ndim == 0 else out


def amplitude_zero(params: PhysicalParams, n: int) -> float:
    """Time of the ``n``-th zero of the excited amplitude (``n = 0, 1, ...``)."""
    if n < 0:
        raise ValueError("zero index must be >= 0")
    G = rabi_rate(params)
    return 2.0 * ((n + 1) * math.pi - math.atan(G / params.lam)) / G


def amplitude_zeros(params: PhysicalParams, horizon: float) -> np.ndarray:
    """All zeros of the excited amplitude in ``[0, horizon]``."""
    G = rabi_rate(params)
    t0 = amplitude_zero(params, 0)
    if horizon < t0:
        return np.empty(0)
    count = int(math.floor((horizon - t0) * G / (2.0 * math.pi))) + 1
    zeros = t0 + 2.0 * math.pi / G * np.arange(count)
    return zeros[zeros <= horizon]


def decay_rate_exact(params: PhysicalParams, t):
    """Unguarded exact decay rate; infinite or huge at the zeros of c_e."""
    G, t, c, s = _envelope_parts(params, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(2.0 * params.gamma0 * params.lam * s / (G * c + params.lam * s))
    return float(out) if out.ndim == 0 else out


def generator_exact(params: PhysicalParams, t: float, guard: float | None = None):
    """Sample ``(S, gamma)`` at ``t``; raises :class:`AtPole` near a zero of c_e."""
    from .generators import GeneratorSample

    G = rabi_rate(params)
    guard = DEFAULT_POLE_GUARD / G if guard is None else guard
    t0 = amplitude_zero(params, 0)
    period = 2.0 * math.pi / G
    k = max(0, round((t - t0) / period))
    nearest = t0 + k * period
    if abs(t - nearest) < guard:
        raise AtPole(t, nearest)
    return GeneratorSample(s=0.0, gamma=decay_rate_exact(params, t))


def exact_density(params: PhysicalParams, initial: InitialState, t):
    return density_from_amplitudes(amplitude_exact(params, initial, t), initial)
