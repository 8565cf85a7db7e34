# %% [markdown]
# # Quantum jumps with negative rates
#
# The non-Markovian jump unravelling moves ensemble members from the
# deterministic branch to |g> while gamma > 0 and sends them back (reverse
# jumps) while gamma < 0.  Right before a pole the whole branch empties, so
# each pole neighbourhood is crossed in a single frozen step whose estimate
# is the exact conditional mean.

# %%
import numpy as np

from nmtcl import InitialState, TimeGrid, make_params, nmqj_diagnostics, nmqj_run, solve_tcl
from nmtcl.analysis import loglog_fit

params = make_params(10.0, 1.0)
grid = TimeGrid.uniform(0.0, 10.0, 1001)
state = InitialState.excited()
ref = solve_tcl("exact", params, state, grid).rho_ee

run = nmqj_run("exact", params, state, grid, n_traj=100_000, seed=1)
rep = nmqj_diagnostics(run)
tr = run.trajectory
print("jumps:", rep.total_jumps, " reverse jumps:", rep.total_reverse_jumps, " frozen windows:", len(rep.window_spans))
inside = np.abs(tr.rho_ee - ref) <= 4 * tr.rho_ee_se + 1e-12
print(f"points within 4 standard errors: {inside.mean():.2%}")

# %% [markdown]
# Monte Carlo error against ensemble size, pooled over a few seeds.

# %%
sizes = (1_000, 10_000, 100_000)
rms = []
for n in sizes:
    mse = [np.mean((nmqj_run("exact", params, state, grid, n, s).trajectory.rho_ee - ref) ** 2) for s in range(4)]
    rms.append(np.sqrt(np.mean(mse)))
    print(f"n={n:>7d}  rms error {rms[-1]:.2e}")
print("exponent:", round(loglog_fit(sizes, rms).slope, 3))
