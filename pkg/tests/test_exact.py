import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from nmtcl import (
    AtPole,
    InitialState,
    NotStrongCoupling,
    amplitude_derivative_exact,
    amplitude_exact,
    amplitude_zero,
    amplitude_zeros,
    decay_rate_exact,
    exact_density,
    generator_exact,
    make_params,
    rabi_rate,
)

from conftest import amplitude_rk45

strong_pairs = st.tuples(
    st.floats(min_value=0.6, max_value=50.0), st.floats(min_value=0.05, max_value=1.0)
).map(lambda p: make_params(p[0], p[1]))


def test_rabi_rate(strong):
    assert rabi_rate(strong) == pytest.approx(math.sqrt(19.0))
    with pytest.raises(NotStrongCoupling):
        rabi_rate(make_params(0.5, 1.0))


def test_amplitude_against_rk45(strong, excited):
    t = np.linspace(0, 10, 401)
    assert np.max(np.abs(amplitude_exact(strong, excited, t) - amplitude_rk45(strong, excited, t))) < 1e-10


def test_derivative_by_differences(strong, excited):
    t = np.linspace(0.1, 9.9, 50)
    h = 1e-5
    fd = (amplitude_exact(strong, excited, t + h) - amplitude_exact(strong, excited, t - h)) / (2 * h)
    assert np.allclose(amplitude_derivative_exact(strong, excited, t), fd, atol=1e-7)


def test_first_zero_matches_bracketing(strong, excited):
    oracle = brentq(lambda t: amplitude_exact(strong, excited, t).real, 0.5, 1.0, xtol=1e-15)
    assert amplitude_zero(strong, 0) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.82420, abs=1e-5)


def test_zero_spacing(strong):
    z = amplitude_zeros(strong, 10.0)
    assert z.size == 7
    assert np.allclose(np.diff(z), 2 * math.pi / rabi_rate(strong))
    assert amplitude_zeros(strong, 0.5).size == 0
    with pytest.raises(ValueError):
        amplitude_zero(strong, -1)


@settings(max_examples=30, deadline=None)
@given(strong_pairs, st.integers(0, 4))
def test_pole_residue_minus_two(params, n):
    tz = amplitude_zero(params, n)
    d = 1e-7 / rabi_rate(params)
    for side in (-1, 1):
        t = tz + side * d
        assert (t - tz) * decay_rate_exact(params, t) == pytest.approx(-2.0, rel=1e-4)


def test_generator_guard(strong):
    tz = amplitude_zero(strong, 2)
    with pytest.raises(AtPole) as info:
        generator_exact(strong, tz)
    assert info.value.pole == pytest.approx(tz)
    g = generator_exact(strong, 0.3)
    assert g.s == 0.0
    assert g.gamma == pytest.approx(decay_rate_exact(strong, 0.3))


def test_rate_is_log_derivative(strong, excited):
    t = np.array([0.2, 1.5, 3.0, 6.1])
    c = amplitude_exact(strong, excited, t)
    dc = amplitude_derivative_exact(strong, excited, t)
    assert np.allclose(decay_rate_exact(strong, t), -2 * (dc / c).real)


def test_superposition_is_half(strong, excited, superposition):
    t = np.linspace(0, 10, 101)
    a = exact_density(strong, excited, t)[0]
    b = exact_density(strong, superposition, t)[0]
    assert np.allclose(b, 0.5 * a, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(strong_pairs, st.floats(0, 2 * math.pi), st.floats(0, 1))
def test_density_physical(params, phase, pop):
    init = InitialState(math.sqrt(pop), math.sqrt(1 - pop) * complex(math.cos(phase), math.sin(phase)))
    ee, eg = exact_density(params, init, np.linspace(0, 20, 201))
    assert np.all(ee <= 1 + 1e-12) and np.all(ee >= 0)
    assert np.all(np.abs(eg) ** 2 <= ee * (1 - ee) + 1e-12)
