# %% [markdown]
# # Multiscale versus ordinary perturbation theory
#
# Ordinary weak-coupling expansions of the generator (second and fourth order)
# stay positive, so the population they produce decays monotonically and the
# revivals disappear.  The multiple-scales generators keep the oscillation and
# have poles of their own.

# %%
import numpy as np

from nmtcl import InitialState, TimeGrid, error_order_study, exact_density, make_params, singular_time, solve_tcl
from nmtcl.analysis import residual_order_check

params = make_params(10.0, 1.0)
grid = TimeGrid.uniform(0.0, 10.0, 1001)
state = InitialState.excited()
ref = exact_density(params, state, grid.points)[0]

for kind in ("exact", "ms1", "ms2", "ord2", "ord4"):
    ee = solve_tcl(kind, params, state, grid).rho_ee
    mono = bool(np.all(np.diff(ee) <= 0))
    print(f"{kind:5s} sup error {np.max(np.abs(ee - ref)):.4f}   monotone {mono}")

# %% [markdown]
# ## First singular time
#
# The multiscale generators predict the first pole with relative errors that
# shrink like eps^(1/2) (first order) and eps^(3/2) (second order).

# %%
for kind in ("exact", "ms1", "ms2"):
    print(f"{kind:5s} t0 = {singular_time(kind, params):.5f}")

rep = error_order_study()
print("\n   eps     err ms1     err ms2")
for e, a, b in zip(rep.eps_grid, rep.rel_errors_ms1, rep.rel_errors_ms2):
    print(f"{e:6.3f}  {a:.3e}  {b:.3e}")
print(f"fitted slopes: {rep.fitted_slope_ms1:.3f}, {rep.fitted_slope_ms2:.3f}")

# %% [markdown]
# ## Residual of the amplitude equation
#
# Rebuilding the amplitude from each generator and inserting it into
# c'' + eps c' + eps/2 c = 0 leaves a residual whose power of eps grows with
# the order of the approximation.

# %%
for order in (0, 1, 2):
    r = residual_order_check(order)
    print(f"order {order}: residual ~ eps^{r.fitted_power:.2f}")
