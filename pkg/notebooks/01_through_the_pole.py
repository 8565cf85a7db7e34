# %% [markdown]
# # Propagating through a singular generator
#
# A two-level atom coupled to a Lorentzian reservoir with gamma0 = 10, lambda = 1.
# The excited amplitude oscillates and passes through zero; at every zero the
# time-local decay rate gamma(t) has a simple pole with residue -2.

# %%
import numpy as np

from nmtcl import (
    InitialState,
    TimeGrid,
    amplitude_zeros,
    decay_rate_exact,
    exact_density,
    make_params,
    solve_tcl,
)

params = make_params(10.0, 1.0)
grid = TimeGrid.uniform(0.0, 10.0, 1001)
print("regime:", params.regime.value, " eps =", params.eps)
print("zeros of c_e in tau:", np.round(amplitude_zeros(params, 10.0), 5))

# %% [markdown]
# The rate right next to the first zero behaves like -2/(t - t*).

# %%
t_star = amplitude_zeros(params, 1.0)[0]
for d in (1e-2, 1e-4, 1e-6):
    print(f"d={d:.0e}  (t - t*) gamma = {d * decay_rate_exact(params, t_star + d):+.6f}")

# %% [markdown]
# The solver integrates gamma between poles and adds the logarithm of each
# pole back analytically, so it marches straight through all seven of them.

# %%
for label, state in (("|e>", InitialState.excited()), ("(|e>+|g>)/sqrt2", InitialState.superposition())):
    traj = solve_tcl("exact", params, state, grid)
    ref_ee, ref_eg = exact_density(params, state, grid.points)
    print(
        f"{label:18s} poles crossed {len(traj.crossings)}  "
        f"max|d rho_ee| {np.max(np.abs(traj.rho_ee - ref_ee)):.1e}  "
        f"max|d rho_eg| {np.max(np.abs(traj.rho_eg - ref_eg)):.1e}"
    )

# %% [markdown]
# The coherence changes sign at each pole (the amplitude crosses zero), which
# is visible in its real part sampled on either side of the first crossing.

# %%
traj = solve_tcl("exact", params, InitialState.superposition(), grid)
i = np.searchsorted(grid.points, t_star)
print("rho_eg before / after:", traj.rho_eg[i - 5].real, traj.rho_eg[i + 5].real)
