import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from nmtcl import (
    AtPole,
    Generator,
    GeneratorKind,
    NotStrongCoupling,
    amplitude_zeros,
    decay_rate_exact,
    generator,
    make_params,
    poles,
    sample,
)

SINGULAR = ["exact", "ms1", "ms2"]


def _pole_by_bracketing(rate, lo, hi):
    # 1/gamma is continuous through a simple pole and changes sign there
    return brentq(lambda t: 1.0 / rate(t), lo, hi, xtol=1e-15)


def test_kinds():
    assert {k.value for k in GeneratorKind} == {"exact", "ms1", "ms2", "ord2", "ord4"}
    with pytest.raises(ValueError):
        GeneratorKind("tcl6")


def test_exact_generator_delegates(strong):
    g = generator("exact", strong)
    t = np.linspace(0.1, 9.9, 20)
    assert np.allclose(g.rate(t), decay_rate_exact(strong, t))
    assert np.allclose(g.poles(10), amplitude_zeros(strong, 10))


@pytest.mark.parametrize("kind, lo, hi, value", [("ms1", 0.6, 0.8, 0.70248), ("ms2", 0.78, 0.86, 0.82137)])
def test_first_poles_by_bracketing(strong, kind, lo, hi, value):
    g = generator(kind, strong)
    oracle = _pole_by_bracketing(g.rate, lo, hi)
    assert g.poles(1.0)[0] == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(value, abs=1e-4)


@pytest.mark.parametrize("kind", SINGULAR)
def test_pole_list_periodic(strong, kind):
    g = generator(kind, strong)
    p = g.poles(10.0)
    assert p.size >= 6
    assert np.ptp(np.diff(p)) < 1e-12
    for k in range(1, p.size):
        mid = p[k]
        half = 0.3 * (p[1] - p[0])
        assert _pole_by_bracketing(g.rate, mid - half, mid + half) == pytest.approx(mid, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(SINGULAR),
    st.floats(min_value=0.01, max_value=1.5),
    st.integers(0, 5),
)
def test_residue_minus_two(kind, eps, n):
    params = make_params(1.0, eps)
    g = generator(kind, params)
    tp = g.poles(1e4)[n]
    d = 1e-7 * g.time_scale
    assert g.residue == -2.0
    for side in (-1, 1):
        t = tp + side * d
        assert (t - tp) * float(g.rate(t)) == pytest.approx(-2.0, rel=1e-4)


def test_multiscale_small_eps_limit(strong):
    # early on both expansions follow the exact rate closely
    t = np.linspace(0.01, 0.3, 30)
    ex = decay_rate_exact(strong, t)
    for kind, tol in (("ms1", 0.3), ("ms2", 0.02)):
        assert np.max(np.abs(generator(kind, strong).rate(t) - ex)) < tol * strong.gamma0


def _taylor_in_gamma0(lam, t, order, radius=0.2, m=64):
    """Taylor coefficients of the exact rate in gamma0 by a Cauchy contour integral.

    The rate is even in Gamma, hence analytic in gamma0 at the origin, so the
    complex square root branch does not matter.
    """
    theta = 2 * np.pi * np.arange(m) / m
    g0 = radius * np.exp(1j * theta)
    G = np.sqrt(2 * g0 * lam - lam**2 + 0j)
    s, c = np.sin(G * t / 2), np.cos(G * t / 2)
    vals = 2 * g0 * lam * s / (G * c + lam * s)
    return [float((np.mean(vals * np.exp(-1j * k * theta)) / radius**k).real) for k in range(order + 1)]


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.5, 6.0])
def test_ordinary_expansions_match_weak_coupling_series(t):
    lam = 1.0
    a = _taylor_in_gamma0(lam, t, 2)
    assert abs(a[0]) < 1e-12
    for g0 in (0.3, 10.0):
        p = make_params(g0, lam)
        assert float(generator("ord2", p).rate(t)) == pytest.approx(a[1] * g0, rel=1e-10)
        assert float(generator("ord4", p).rate(t)) == pytest.approx(a[1] * g0 + a[2] * g0**2, rel=1e-10)


@pytest.mark.parametrize("kind", ["ord2", "ord4"])
def test_ordinary_nonnegative_and_poleless(strong, kind):
    g = generator(kind, strong)
    t = np.linspace(0, 10, 2001)
    assert np.all(g.rate(t) >= 0)
    assert g.poles(100).size == 0 and g.residue is None
    assert np.all(g.shift(t) == 0)


def test_ms_needs_strong_coupling():
    weak = make_params(0.2, 1.0)
    for kind in ("ms1", "ms2"):
        with pytest.raises(NotStrongCoupling):
            generator(kind, weak)
    generator("ord4", weak)


def test_sample_guard(strong):
    tp = poles("ms2", strong, 1.0)[0]
    with pytest.raises(AtPole):
        sample("ms2", strong, tp)
    assert sample("ord2", strong, 1.0).gamma == pytest.approx(10 * (1 - math.exp(-1)))


def test_constant_generator():
    g = Generator.constant(0.7)
    assert g.rate(3.0) == 0.7
    assert np.all(g.rate(np.ones(3)) == 0.7)
    assert generator(g, make_params(1, 1)) is g
