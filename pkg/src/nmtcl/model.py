"""Physical parameters, initial states and the reduced qubit state.

The qubit is resonant with the centre of a Lorentzian reservoir, so the only
parameters left are the coupling rate ``gamma0`` and the reservoir width
``lam``.  Every solver works in absolute time; the dimensionless axes
``tau = lam * t`` and ``T = gamma0 * t`` are conversions done at the edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveParameter, NormViolation


class Regime(enum.Enum):
    STRONG = "strong"
    CRITICAL = "critical"
    WEAK = "weak"


@dataclass(frozen=True)
class PhysicalParams:
    """Coupling rate and reservoir width of the damped two-level system.

    Use :func:`make_params` to build one; it validates the inputs and fills
    in the derived fields.
    """

    gamma0: float
    lam: float
    eps: float
    regime: Regime

    @property
    def is_strong(self) -> bool:
        return self.regime is Regime.STRONG

    def to_tau(self, t):
        return self.lam * np.asarray(t, dtype=float)

    def from_tau(self, tau):
        return np.asarray(tau, dtype=float) / self.lam

    def to_T(self, t):
        return self.gamma0 * np.asarray(t, dtype=float)


def make_params(gamma0: float, lam: float) -> PhysicalParams:
    """Validate ``(gamma0, lam)`` and classify the coupling regime.

    >>> make_params(10.0, 1.0).eps
    0.1
    """
    for name, value in (("gamma0", gamma0), ("lambda", lam)):
        if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value)) or value <= 0:
            raise NonPositiveParameter(f"{name} must be positive and finite, got {value!r}")
    gamma0 = float(gamma0)
    lam = float(lam)
    if gamma0 > lam / 2:
        regime = Regime.STRONG
    elif gamma0 == lam / 2:
        regime = Regime.CRITICAL
    else:
        regime = Regime.WEAK
    return PhysicalParams(gamma0=gamma0, lam=lam, eps=lam / gamma0, regime=regime)


def correlation_kernel(params: PhysicalParams, dt):
    """Reservoir correlation ``f(dt) = gamma0*lam/2 * exp(-lam*|dt|)``.

    Real because the qubit sits on resonance with the cavity mode.
    """
    dt = np.asarray(dt, dtype=float)
    out = 0.5 * params.gamma0 * params.lam * np.exp(-params.lam * np.abs(dt))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class InitialState:
    """Initial qubit amplitudes; the reservoir starts in its vacuum."""

    c_e0: complex
    c_g0: complex

    def __post_init__(self):
        norm = abs(self.c_e0) ** 2 + abs(self.c_g0) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise NormViolation(f"|c_e0|^2 + |c_g0|^2 = {norm!r}, expected 1")
        object.__setattr__(self, "c_e0", complex(self.c_e0))
        object.__setattr__(self, "c_g0", complex(self.c_g0))

    @classmethod
    def excited(cls) -> "InitialState":
        return cls(1.0, 0.0)

    @classmethod
    def superposition(cls) -> "InitialState":
        """``(|e> + |g>)/sqrt(2)``."""
        a = 1.0 / math.sqrt(2.0)
        return cls(a, a)

    @property
    def rho_ee(self) -> float:
        return abs(self.c_e0) ** 2

    @property
    def rho_eg(self) -> complex:
        return self.c_e0 * self.c_g0.conjugate()


@dataclass(frozen=True)
class QubitState:
    """Reduced density matrix stored as its excited population and coherence."""

    rho_ee: float
    rho_eg: complex

    @property
    def rho_gg(self) -> float:
        return 1.0 - self.rho_ee

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.rho_ee, self.rho_eg], [np.conj(self.rho_eg), self.rho_gg]],
            dtype=complex,
        )

    def is_physical(self, tol: float = 1e-10) -> bool:
        if not (-tol <= self.rho_ee <= 1.0 + tol):
            return False
        return abs(self.rho_eg) ** 2 <= self.rho_ee * self.rho_gg + tol


def density_from_amplitudes(c_e, initial: InitialState):
    """Partial trace of the single-excitation state over the reservoir.

    Accepts a scalar (returns :class:`QubitState`) or an array of excited
    amplitudes (returns ``(rho_ee, rho_eg)`` arrays).
    """
    c_e = np.asarray(c_e, dtype=complex)
    rho_ee = np.abs(c_e) ** 2
    if np.any(rho_ee > 1.0 + 1e-9):
        raise NormViolation(f"excited population {rho_ee.max()!r} exceeds 1")
    rho_eg = c_e * np.conj(initial.c_g0)
    if c_e.ndim == 0:
        return QubitState(float(rho_ee), complex(rho_eg))
    return rho_ee, rho_eg


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing sample times, ``t >= 0``."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise ValueError("time grid is empty")
        if pts[0] < 0 or not np.all(np.isfinite(pts)):
            raise ValueError("time grid must be finite and start at t >= 0")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("time grid must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t_start: float, t_end: float, n_points: int) -> "TimeGrid":
        if n_points < 2 or not t_end > t_start:
            raise ValueError(
                f"need t_end > t_start and n_points >= 2, got [{t_start}, {t_end}] x {n_points}"
            )
        return cls(np.linspace(t_start, t_end, n_points))

    @property
    def t_start(self) -> float:
        return float(self.points[0])

    @property
    def t_end(self) -> float:
        return float(self.points[-1])

    @property
    def n_points(self) -> int:
        return int(self.points.size)

    @property
    def step(self) -> float:
        """Step of a uniform grid; raises if the grid is not uniform."""
        d = np.diff(self.points)
        if d.size == 0:
            return 0.0
        if np.ptp(d) > 1e-9 * d.mean():
            raise ValueError("grid is not uniform")
        return float(d.mean())

    def __len__(self):
        return self.n_points

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.points, other.points)

    __hash__ = None
