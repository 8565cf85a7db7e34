"""Time-dependent TCL generators ``(S(t), gamma(t))`` with known pole sets.

Five kinds ship: the exact generator, the first- and second-order multiscale
generators, and the second- and fourth-order ordinary (coupling-expansion)
generators.  The perturbative formulas are dimensionless in ``eps`` and
``T = gamma0*t`` and give ``gamma/gamma0``; they are converted to absolute
rates here.  All Lamb shifts vanish on resonance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import exact
from .errors import AtPole, NotStrongCoupling
from .model import PhysicalParams


class GeneratorKind(enum.Enum):
    EXACT = "exact"
    MULTISCALE1 = "ms1"
    MULTISCALE2 = "ms2"
    ORDINARY2 = "ord2"
    ORDINARY4 = "ord4"


@dataclass(frozen=True)
class GeneratorSample:
    s: float
    gamma: float


def _zero_shift(t):
    t = np.asarray(t, dtype=float)
    return np.zeros_like(t) if t.ndim else 0.0


@dataclass(frozen=True)
class Generator:
    """A concrete generator: unguarded rate functions plus pole metadata.

    ``rate`` and ``shift`` accept scalars or arrays and do no pole checking;
    ``pole_times(horizon)`` lists every pole in ``[0, horizon]``.  All poles
    of a generator share ``residue``: near a pole ``t*``,
    ``gamma(t) ~ residue / (t - t*)``.  ``time_scale`` sets the default width
    of pole windows in the solvers.
    """

    name: str
    rate: Callable
    shift: Callable = _zero_shift
    pole_times: Callable[[float], np.ndarray] = lambda horizon: np.empty(0)
    residue: Optional[float] = None
    time_scale: float = 1.0

    def poles(self, horizon: float) -> np.ndarray:
        return np.asarray(self.pole_times(horizon), dtype=float)

    def sample(self, t: float, guard: float | None = None) -> GeneratorSample:
        guard = 1e-9 * self.time_scale if guard is None else guard
        if self.residue is not None:
            ps = self.poles(t + guard)
            if ps.size:
                nearest = ps[np.argmin(np.abs(ps - t))]
                if abs(t - nearest) < guard:
                    raise AtPole(t, float(nearest))
        return GeneratorSample(s=float(self.shift(t)), gamma=float(self.rate(t)))

    @classmethod
    def constant(cls, gamma: float, name: str = "constant") -> "Generator":
        """Markovian generator with a fixed decay rate; ``gamma=0`` freezes the state."""

        def rate(t):
            t = np.asarray(t, dtype=float)
            return np.full_like(t, gamma) if t.ndim else float(gamma)

        return cls(name=name, rate=rate)


def _periodic_poles(first: float, period: float, horizon: float) -> np.ndarray:
    if horizon < first:
        return np.empty(0)
    n = int(math.floor((horizon - first) / period)) + 1
    out = first + period * np.arange(n)
    return out[out <= horizon]


def _require_strong(params: PhysicalParams, kind: GeneratorKind):
    if not params.is_strong:
        raise NotStrongCoupling(f"{kind.value} generator needs gamma0 > lambda/2")


def _ms2_frequency(eps: float) -> float:
    # angular frequency in T units of the second-order trigonometric argument
    return math.sqrt(2.0 * eps) * (1.0 - eps / 4.0) / 2.0


def generator(kind, params: PhysicalParams) -> Generator:
    """Build the :class:`Generator` for ``kind``; passes a Generator through."""
    if isinstance(kind, Generator):
        return kind
    kind = GeneratorKind(kind)
    g0, lam, eps = params.gamma0, params.lam, params.eps

    if kind is GeneratorKind.EXACT:
        G = exact.rabi_rate(params)
        return Generator(
            name=kind.value,
            rate=lambda t: exact.decay_rate_exact(params, t),
            pole_times=lambda h: exact.amplitude_zeros(params, h),
            residue=-2.0,
            time_scale=1.0 / G,
        )

    if kind is GeneratorKind.MULTISCALE1:
        _require_strong(params, kind)
        root = math.sqrt(2.0 * eps)

        def rate(t):
            x = 0.5 * root * g0 * np.asarray(t, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return g0 * (eps + root * np.sin(x) / np.cos(x))

        omega = root * g0  # pole period is 2*pi/omega
        return Generator(
            name=kind.value,
            rate=rate,
            pole_times=lambda h: _periodic_poles(math.pi / omega, 2.0 * math.pi / omega, h),
            residue=-2.0,
            time_scale=1.0 / omega,
        )

    if kind is GeneratorKind.MULTISCALE2:
        _require_strong(params, kind)
        w = _ms2_frequency(eps)
        root_eps = math.sqrt(eps)
        root2eps = math.sqrt(2.0 * eps)

        def rate(t):
            phi = w * g0 * np.asarray(t, dtype=float)
            c, s = np.cos(phi), np.sin(phi)
            num = root_eps * (eps**1.5 * c + math.sqrt(2.0) * (4.0 + eps) * s)
            with np.errstate(divide="ignore", invalid="ignore"):
                return g0 * num / (4.0 * c + 2.0 * root2eps * s)

        phi0 = math.acos(-math.sqrt(eps / (2.0 + eps)))
        return Generator(
            name=kind.value,
            rate=rate,
            pole_times=lambda h: _periodic_poles(phi0 / (w * g0), math.pi / (w * g0), h),
            residue=-2.0,
            time_scale=1.0 / (2.0 * w * g0),
        )

    if kind is GeneratorKind.ORDINARY2:

        def rate(t):
            return -g0 * np.expm1(-lam * np.asarray(t, dtype=float))

        return Generator(name=kind.value, rate=rate, time_scale=1.0 / lam)

    # ORDINARY4: gamma0 (1 - e^{-x}) + gamma0^2/(2 lam) (1 - e^{-2x} - 2x e^{-x}), x = lam t
    def rate(t):
        x = lam * np.asarray(t, dtype=float)
        second = -g0 * np.expm1(-x)
        fourth = g0**2 / (2.0 * lam) * (-np.expm1(-2.0 * x) - 2.0 * x * np.exp(-x))
        return second + fourth

    return Generator(name=kind.value, rate=rate, time_scale=1.0 / lam)


def sample(kind, params: PhysicalParams, t: float, guard: float | None = None) -> GeneratorSample:
    if not isinstance(kind, Generator) and GeneratorKind(kind) is GeneratorKind.EXACT:
        return exact.generator_exact(params, t, guard)
    return generator(kind, params).sample(t, guard)


def poles(kind, params: PhysicalParams, horizon: float) -> np.ndarray:
    return generator(kind, params).poles(horizon)
