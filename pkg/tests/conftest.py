import sys

import numpy as np
import pytest

from nmtcl import InitialState, TimeGrid, make_params


@pytest.fixture(scope="session")
def strong():
    """gamma0 = 10, lambda = 1: the parameters of both figures."""
    return make_params(10.0, 1.0)


@pytest.fixture(scope="session")
def fig_grid():
    return TimeGrid.uniform(0.0, 10.0, 1001)


@pytest.fixture(scope="session")
def excited():
    return InitialState.excited()


@pytest.fixture(scope="session")
def superposition():
    return InitialState.superposition()


def amplitude_rk45(params, initial, t):
    """Independent amplitude from scipy's RK45 on c'' + lam c' + gamma0 lam/2 c = 0."""
    from scipy.integrate import solve_ivp

    lam, g0 = params.lam, params.gamma0
    sol = solve_ivp(
        lambda _, y: [y[1], -lam * y[1] - 0.5 * g0 * lam * y[0]],
        (0.0, float(np.max(t))),
        [1.0, 0.0],
        t_eval=np.asarray(t, dtype=float),
        rtol=1e-12,
        atol=1e-14,
        method="DOP853",
    )
    return initial.c_e0 * sol.y[0]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
