import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from isoperim.measure import (MeasureError, NonConvexExamplePotential, PowerLogPotential, PowerPotential,
                              SmoothedPotential, TabulatedPotential, build_measure, cdf, potential_from_recipe,
                              quantile, tail_equivalent)

from conftest import measure


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 2.0, 3.0])
def test_normalization_closed_form(p):
    m = measure({"family": "power", "p": p})
    assert m.Z == pytest.approx(2 * special.gamma(1 + 1 / p), rel=1e-12)


def test_gaussian_normalization(quad2):
    assert quad2.Z == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert quad2.Z == pytest.approx(1.772453851, abs=1e-9)


@given(p=st.floats(1.0, 2.0), alpha=st.floats(0.0, 2.0), kind=st.sampled_from(["power", "power-log"]))
def test_normalization_invariant(p, alpha, kind):
    if kind == "power-log" and alpha > 0:
        p = min(p, 1.95)
    rec = {"family": "power", "p": p} if kind == "power" else {"family": "power-log", "p": p, "alpha": alpha}
    m = build_measure(rec)
    assert m.normalization_error() <= 1e-10
    # independent oracle for Z
    f = lambda x: math.exp(-float(m.potential.value(x)))
    z = 2 * integrate.quad(f, 0, np.inf, limit=400, epsabs=0, epsrel=1e-13)[0]
    assert m.Z == pytest.approx(z, rel=1e-9)
    assert m.sf(m.X) < 1e-12 and m.cdf(-m.X) < 1e-12


def test_exponential_cdf(expo):
    assert cdf(expo, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert cdf(expo, math.log(0.5)) == pytest.approx(0.25, abs=1e-14)
    assert cdf(expo, -expo.X) <= 1e-12
    x = np.linspace(-20, 0, 41)
    np.testing.assert_allclose(expo.cdf(x), np.exp(x) / 2, rtol=1e-12)
    assert cdf(expo, -1e3) == 0.0 and cdf(expo, 1e3) == 1.0


def test_gaussian_cdf_against_erfc(gauss):
    x = np.linspace(-0.99 * gauss.X, 0.99 * gauss.X, 33)
    np.testing.assert_allclose(gauss.cdf(x), 0.5 * special.erfc(-x / math.sqrt(2)), rtol=1e-10, atol=1e-15)


def test_quantile_examples(expo, quad2):
    assert quantile(quad2, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert quantile(expo, 0.25) == pytest.approx(math.log(0.5), abs=1e-12)
    for x in (-3, -1, 0, 1, 3):
        assert quantile(quad2, cdf(quad2, x)) == pytest.approx(x, abs=1e-8)


@pytest.mark.parametrize("t", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_quantile_domain(expo, t):
    with pytest.raises(ValueError):
        quantile(expo, t)


@given(t=st.floats(1e-12, 1 - 1e-12), p=st.sampled_from([1.0, 1.5, 2.0]))
def test_quantile_cdf_inverse_pair(t, p):
    m = measure({"family": "power", "p": p})
    x = m.quantile(t)
    assert abs(m.cdf(x) - t) <= 1e-10
    # relative accuracy in the lower tail
    if t < 0.5:
        assert abs(m.cdf(x) / t - 1) <= 1e-10


def test_median_and_symmetry():
    for rec in ({"family": "power", "p": 1.5}, {"family": "power-log", "p": 1.5, "alpha": 1.0},
                {"family": "nonconvex-example", "alpha": 1.5}):
        m = measure(rec)
        assert m.median == 0.0
        assert m.cdf(0.0) == pytest.approx(0.5, abs=1e-10)
        x = np.linspace(0, 5, 11)
        np.testing.assert_allclose(m.density(x), m.density(-x), rtol=0, atol=0)


def test_tail_equivalent_examples(expo, quad2):
    assert tail_equivalent(expo, -10.0) == pytest.approx(math.exp(-10) / 2, rel=1e-12)
    assert tail_equivalent(expo, -10.0) == pytest.approx(2.270e-5, rel=1e-3)
    assert tail_equivalent(quad2, -5.0) == pytest.approx(math.exp(-25) / (10 * math.sqrt(math.pi)), rel=1e-12)
    # default truncation stops near -11.4; widen it so -15 is inside the window
    m = build_measure({"family": "power", "p": 1.5}, tail_target=1e-40)
    assert m.X > 15
    assert m.cdf(-15.0) / m.tail_equivalent(-15.0) == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        expo.tail_equivalent(0.5)


@pytest.mark.parametrize("rec", [{"family": "power", "p": 1.0}, {"family": "power", "p": 1.5},
                                 {"family": "power", "p": 2.0}, {"family": "power-log", "p": 1.5, "alpha": 1.0}])
def test_tail_sandwich(rec):
    m = measure(rec)
    for t in (1e-4, 1e-6, 1e-9):
        y = m.quantile(t)
        r = m.cdf(y) / m.tail_equivalent(y)
        assert 0.5 <= r <= 2.0


class _Plateau(PowerPotential):
    """x^2 with a flat stretch on [1, 2]; only used to hit the singular branch."""

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1, x * x, np.where(x < 2, 1.0, 1.0 + (x - 2) ** 2 + 2 * (x - 2)))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1, 2 * x, np.where(x < 2, 0.0, 2 * (x - 2) + 2.0))


def test_singular_derivative():
    m = build_measure(_Plateau(2.0))
    with pytest.raises(MeasureError, match="singular"):
        m.tail_equivalent(-1.5)


@given(x=st.floats(0.0, 30.0))
def test_potential_inverse_roundtrip(x):
    for pot in (PowerPotential(1.5), PowerLogPotential(1.5, 1.0), NonConvexExamplePotential(1.5),
                SmoothedPotential(PowerPotential(1.5))):
        y = pot.inverse(pot.value(x))
        assert pot.value(y) == pytest.approx(pot.value(x), rel=1e-12, abs=1e-12)
        if x > 1:
            assert y == pytest.approx(x, abs=1e-10)


@pytest.mark.parametrize("pot", [PowerPotential(1.0), PowerPotential(1.5), PowerPotential(2.0),
                                 PowerLogPotential(1.5, 1.0), PowerLogPotential(1.0, 2.0)])
def test_convex_sqrt_concave_flags(pot):
    inv = pot.check_invariants()
    assert all(inv.values()), inv
    assert pot.convex


def test_nonconvex_example():
    pot = NonConvexExamplePotential(1.5)
    assert not pot.convex
    x = np.linspace(1, 3, 401)
    assert np.all(np.isfinite(pot.value(x)))
    # exact formula away from the core
    np.testing.assert_allclose(pot.value(x), x**1.5 + np.log1p(x * np.sin(x) ** 2), rtol=1e-14)
    # C^2 matching at eps
    e = pot.eps
    for fn in (pot.value, pot.deriv, pot.second):
        assert float(fn(e - 1e-9)) == pytest.approx(float(fn(e + 1e-9)), rel=1e-5, abs=1e-6)
    m = build_measure(pot)
    assert not m.symmetric_log_concave
    assert m.normalization_error() <= 1e-10


def test_gamma_auto():
    pot = PowerLogPotential(1.5, 1.0)
    assert pot.gamma == pytest.approx(math.exp(1.0 / 0.5))
    explicit = PowerLogPotential(1.5, 1.0, gamma=math.exp(2 * 1.0 / 0.5))
    assert explicit.gamma != pot.gamma


def test_table_potential():
    x = np.linspace(0, 60, 400)
    m = build_measure({"family": "table", "x": x.tolist(), "phi": x.tolist()})
    assert m.Z == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(MeasureError, match="non-monotone"):
        TabulatedPotential(x, np.sin(x))
    with pytest.raises(MeasureError):
        build_measure({"family": "table", "x": [0, 1, 2, 5], "phi": [0, 1, 2, 5]})


def test_recipe_errors():
    with pytest.raises(MeasureError, match="family"):
        potential_from_recipe({"family": "nope"})
    with pytest.raises(MeasureError, match="family"):
        potential_from_recipe({"p": 1})
    for rec in ({"family": "power", "p": 1.5}, {"family": "power-log", "p": 1.5, "alpha": 1.0},
                {"family": "nonconvex-example", "alpha": 1.5}):
        assert potential_from_recipe(potential_from_recipe(rec).recipe).recipe == potential_from_recipe(rec).recipe
