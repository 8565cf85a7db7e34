"""Non-Markovian quantum-jump (NMQJ) Monte Carlo for the damped qubit.

At zero temperature the only jump is ``|psi> -> |g>``, so every ensemble
member is either still in the deterministic branch ``|psi(t)>`` (shared by
all of them) or in ``|g>``.  The ensemble is therefore a pair of counts and
each time step is a binomial draw:

* where the branch norm ``N(t) = |c_e|^2 + |c_g|^2`` decreases
  (``gamma > 0``), each ``|psi>`` member jumps to ``|g>`` with probability
  ``1 - N(t+dt)/N(t)``;
* where it increases (``gamma < 0``), each ``|g>`` member returns to
  ``|psi>`` with probability ``(n_psi/n_g) * (N(t+dt)/N(t) - 1)``.

Both rules keep ``E[n_psi(t)] / n = N(t)``, which is the TCL population.
Steps are halved until every draw has probability at most ``p_cap``.

Around a pole the branch norm of an excited initial state goes to zero and
every member would jump, leaving nothing to return.  The ensemble is
therefore frozen over a window ``[t*-w, t_b]``, where ``t_b > t*`` is chosen
so that ``N(t_b) = N(t*-w)``; the net jump probability across the window is
zero.  Inside the window the estimators are conditional means given the
frozen counts.

The ensemble is split into blocks with independent random streams spawned
from one seed.  Block means give the standard errors, and the result does
not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyTargetClass, StepProbabilityOverflow
from .generators import generator
from .model import InitialState, PhysicalParams, TimeGrid
from .tcl_solver import BranchPropagator, Trajectory


@dataclass
class Ensemble:
    """Counts of one block of trajectories plus the shared branch state."""

    n_total: int
    n_in_psi: int
    psi_amplitudes: tuple
    rng_seed: object

    @property
    def n_in_g(self) -> int:
        return self.n_total - self.n_in_psi


@dataclass(frozen=True)
class StepRecord:
    t0: float
    t1: float
    jumps: int
    reverse_jumps: int
    frozen: bool = False


@dataclass(eq=False)
class NMQJRun:
    trajectory: Trajectory
    steps: list = field(repr=False)
    windows: list
    n_traj: int
    n_blocks: int
    seed: int
    n_in_psi_start: int
    n_in_psi_end: int


def _block_sizes(n: int, blocks: int) -> list[int]:
    base, extra = divmod(n, blocks)
    return [base + (1 if b < extra else 0) for b in range(blocks)]


def _branch_norm(c_e0, c_g0, factor) -> float:
    return abs(c_e0 * factor) ** 2 + abs(c_g0) ** 2


def _freeze_windows(prop: BranchPropagator, initial: InitialState, horizon: float, width: float):
    """``(t_a, t_b)`` for each pole before ``horizon`` with equal branch norm at both ends."""
    out = []
    pole_list = prop.pole_list
    for i, p in enumerate(pole_list):
        if p - width >= horizon:
            break
        t_a = p - width
        n_a = _branch_norm(initial.c_e0, initial.c_g0, prop.amplitude_factor(prop.at(t_a)))
        upper = pole_list[i + 1] if i + 1 < pole_list.size else p + 4 * width
        upper = 0.5 * (p + upper)

        def excess(t):
            return _branch_norm(initial.c_e0, initial.c_g0, prop.amplitude_factor(prop.at(t))) - n_a

        t_b = p + width
        lo = p + 1e-9 * width
        if excess(upper) > 0 and excess(lo) < 0:
            t_b = brentq(excess, lo, upper, xtol=1e-12 * width, rtol=1e-12)
        out.append((t_a, t_b))
    return out


def nmqj_run(
    kind,
    params: PhysicalParams,
    initial: InitialState,
    grid: TimeGrid,
    n_traj: int,
    seed: int,
    p_cap: float = 0.1,
    n_blocks: int = 20,
    freeze_width: float = 0.2,
    min_step: float | None = None,
) -> NMQJRun:
    """Simulate ``n_traj`` jump trajectories; returns the ensemble estimate.

    ``freeze_width`` is the half-width of the frozen pole windows as a
    fraction of the pole spacing.  The returned trajectory carries standard
    errors estimated from the spread of the block means.
    """
    if n_traj < 100:
        raise ValueError("n_traj must be at least 100")
    n_blocks = max(2, min(n_blocks, n_traj // 50))
    gen = generator(kind, params)
    horizon = grid.t_end
    prop = BranchPropagator(gen, horizon)
    spacing = 2 * math.pi * gen.time_scale
    windows = _freeze_windows(prop, initial, horizon, freeze_width * spacing)
    min_step = 1e-12 * gen.time_scale if min_step is None else min_step

    sizes = _block_sizes(n_traj, n_blocks)
    streams = np.random.SeedSequence(seed).spawn(n_blocks)
    rngs = [np.random.Generator(np.random.PCG64(s)) for s in streams]
    blocks = [Ensemble(n, n, (initial.c_e0, initial.c_g0), s) for n, s in zip(sizes, streams)]

    t_out = grid.points
    n_out = t_out.size
    est_ee = np.zeros((n_blocks, n_out))
    est_eg = np.zeros((n_blocks, n_out), dtype=complex)
    scale = np.zeros(n_out)  # estimator per unit count fraction
    steps: list[StepRecord] = []

    def record(i, factor, norm_ref):
        c_e = initial.c_e0 * factor
        scale[i] = abs(c_e) ** 2 / norm_ref
        for b, ens in enumerate(blocks):
            frac = ens.n_in_psi / ens.n_total
            est_ee[b, i] = frac * abs(c_e) ** 2 / norm_ref
            est_eg[b, i] = frac * c_e * np.conj(initial.c_g0) / norm_ref

    def branch(exps):
        f = prop.amplitude_factor(exps)
        return f, _branch_norm(initial.c_e0, initial.c_g0, f)

    t = 0.0
    factor, norm = branch(prop.advance(0.0))
    i_out = 0
    win_idx = 0
    while i_out < n_out:
        # grid points at the current time
        while i_out < n_out and t_out[i_out] <= t:
            if t_out[i_out] == t:
                record(i_out, factor, norm)
            i_out += 1
        if i_out >= n_out:
            break

        if win_idx < len(windows) and t >= windows[win_idx][0]:
            # frozen window: no jumps, conditional-mean estimators
            t_a, t_b = windows[win_idx]
            norm_a = norm
            while i_out < n_out and t_out[i_out] < t_b:
                f_s, _ = branch(prop.at(t_out[i_out]))
                record(i_out, f_s, norm_a)
                i_out += 1
            new_factor, new_norm = branch(prop.advance(t_b))
            q = 1.0 - new_norm / norm_a
            jumps, rev = _draw(blocks, rngs, q, 1.0, t_b)
            steps.append(StepRecord(t_a, t_b, jumps, rev, frozen=True))
            t, factor, norm = t_b, new_factor, new_norm
            win_idx += 1
            continue

        target = t_out[i_out]
        if win_idx < len(windows):
            target = min(target, windows[win_idx][0])
        dt = target - t
        while True:
            t_new = t + dt
            new_factor, new_norm = branch(prop.peek(t_new))
            q = 1.0 - new_norm / norm
            worst = _worst_probability(blocks, q)
            if worst <= p_cap:
                break
            dt *= 0.5
            if dt < min_step:
                raise StepProbabilityOverflow(t, worst)
        prop.advance(t_new)
        jumps, rev = _draw(blocks, rngs, q, p_cap, t_new)
        steps.append(StepRecord(t, t_new, jumps, rev))
        t, factor, norm = t_new, new_factor, new_norm

    n_psi_end = sum(b.n_in_psi for b in blocks)
    weights = np.array(sizes, dtype=float) / n_traj
    rho_ee = weights @ est_ee
    rho_eg = weights @ est_eg
    se_ee = est_ee.std(axis=0, ddof=1) / math.sqrt(n_blocks)
    # block spread cannot see fluctuations once every block is (nearly) empty;
    # the Agresti-Coull binomial error of the pooled count fraction is a floor
    frac = np.divide(rho_ee, scale, out=np.zeros(n_out), where=scale > 0)
    p_adj = (frac * n_traj + 2.0) / (n_traj + 4.0)
    se_ee = np.maximum(se_ee, scale * np.sqrt(p_adj * (1.0 - p_adj) / n_traj))
    se_eg = np.sqrt(est_eg.real.var(axis=0, ddof=1) + est_eg.imag.var(axis=0, ddof=1)) / math.sqrt(n_blocks)
    traj = Trajectory(
        grid,
        rho_ee,
        rho_eg,
        positivity_ok=bool(np.all((rho_ee >= 0) & (rho_ee <= 1))),
        rho_ee_se=se_ee,
        rho_eg_se=se_eg,
        info={"solver": "nmqj", "n_traj": n_traj, "seed": seed, "n_blocks": n_blocks},
    )
    return NMQJRun(traj, steps, windows, n_traj, n_blocks, seed, n_traj, n_psi_end)


def _worst_probability(blocks, q: float) -> float:
    if q >= 0:
        return q
    worst = 0.0
    for ens in blocks:
        if ens.n_in_psi == 0:
            continue
        if ens.n_in_g == 0:
            return math.inf
        worst = max(worst, -q * ens.n_in_psi / ens.n_in_g)
    return worst


def _draw(blocks, rngs, q: float, cap: float, t: float):
    """One binomial update per block; returns total (jumps, reverse jumps)."""
    jumps = rev = 0
    for ens, rng in zip(blocks, rngs):
        if q > 0:
            k = int(rng.binomial(ens.n_in_psi, min(q, 1.0)))
            ens.n_in_psi -= k
            jumps += k
        elif q < 0 and ens.n_in_psi > 0:
            if ens.n_in_g == 0:
                raise EmptyTargetClass(f"reverse jump needed at t={t!r} but no member is in |g>")
            p = -q * ens.n_in_psi / ens.n_in_g
            if p > 1.0:
                raise EmptyTargetClass(
                    f"reverse-jump probability {p:.3g} > 1 at t={t!r}: too few members in |g>"
                )
            k = int(rng.binomial(ens.n_in_g, p))
            ens.n_in_psi += k
            rev += k
    return jumps, rev


@dataclass(frozen=True)
class NMQJReport:
    """Jump bookkeeping of a finished run.

    ``interval_*`` arrays are indexed by grid interval ``[t_k, t_{k+1})``.
    """

    total_jumps: int
    total_reverse_jumps: int
    net_transfer: int
    interval_jumps: np.ndarray
    interval_reverse_jumps: np.ndarray
    reverse_step_spans: list
    window_spans: list
    window_step_count: int
    window_min_step: float
    overall_min_step: float
    n_steps: int


def nmqj_diagnostics(run: NMQJRun, near_pole: float | None = None) -> NMQJReport:
    """Summarise jumps per grid interval and step statistics near poles.

    ``near_pole`` is the half-width (absolute time) of the neighbourhood
    counted as a pole region for step statistics; it defaults to twice the
    frozen-window extent.
    """
    t = run.trajectory.grid.points
    ij = np.zeros(max(t.size - 1, 0), dtype=np.int64)
    ir = np.zeros_like(ij)
    for s in run.steps:
        k = int(np.clip(np.searchsorted(t, s.t0, side="right") - 1, 0, max(t.size - 2, 0)))
        if ij.size:
            ij[k] += s.jumps
            ir[k] += s.reverse_jumps
    spans = [(s.t0, s.t1) for s in run.steps if s.reverse_jumps > 0]
    if near_pole is None:
        near_pole = max((b - a for a, b in run.windows), default=0.0) * 2
    centres = [0.5 * (a + b) for a, b in run.windows]
    in_win = [
        s for s in run.steps
        if not s.frozen and any(abs(0.5 * (s.t0 + s.t1) - c) <= near_pole for c in centres)
    ]
    dts = [s.t1 - s.t0 for s in run.steps if not s.frozen]
    return NMQJReport(
        total_jumps=sum(s.jumps for s in run.steps),
        total_reverse_jumps=sum(s.reverse_jumps for s in run.steps),
        net_transfer=run.n_in_psi_start - run.n_in_psi_end,
        interval_jumps=ij,
        interval_reverse_jumps=ir,
        reverse_step_spans=spans,
        window_spans=list(run.windows),
        window_step_count=len(in_win),
        window_min_step=min((s.t1 - s.t0 for s in in_win), default=math.nan),
        overall_min_step=min(dts, default=math.nan),
        n_steps=len(run.steps),
    )
