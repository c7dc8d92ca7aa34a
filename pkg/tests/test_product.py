import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoperim.product import (CandidateSet2D, boundary_measure_2d, compare_candidates, comparison_report,
                              match_mass, set_measure_2d)
from isoperim.profile import L_at, profile_at

from conftest import measure

# 2-D quadrature value for the exponential-product ball of mass 0.2, cross-checked against
# a 2e7-sample Monte Carlo estimate in test_ball_monte_carlo
BALL_02 = 0.44902823346399645


def test_set_measure_examples(expo):
    for t in (0.05, 0.2, 0.5):
        s = CandidateSet2D("halfplane", expo.quantile(t))
        assert set_measure_2d(expo, s) == pytest.approx(t, abs=1e-9)
    assert set_measure_2d(expo, CandidateSet2D("ball", 0.0)) == 0.0
    assert set_measure_2d(expo, CandidateSet2D("ball", 1e-6)) < 1e-11
    assert set_measure_2d(expo, CandidateSet2D("square", math.log(2))) == pytest.approx(0.25, abs=1e-12)


def test_ball_measure_against_iterated_oracle(gauss):
    # standard Gaussian: mu^2(|z| <= r) = 1 - exp(-r^2/2)
    for r in (0.3, 1.0, 2.5):
        assert set_measure_2d(gauss, CandidateSet2D("ball", r)) == pytest.approx(1 - math.exp(-r * r / 2),
                                                                                 rel=1e-10)
        assert boundary_measure_2d(gauss, CandidateSet2D("ball", r)) == pytest.approx(
            r * math.exp(-r * r / 2), rel=1e-10)


@given(t=st.floats(1e-6, 0.5), p=st.sampled_from([1.0, 1.5, 2.0]))
def test_factorization(t, p):
    m = measure({"family": "power", "p": p})
    s = match_mass(m, "halfplane", t)
    assert boundary_measure_2d(m, s) == pytest.approx(profile_at(m, t), abs=1e-6, rel=1e-9)


def test_rotation_symmetry(expo):
    for c in (-1.0, 0.3):
        a = CandidateSet2D("rotated", c, math.pi / 2)
        b = CandidateSet2D("halfplane", c)
        assert boundary_measure_2d(expo, a) == pytest.approx(boundary_measure_2d(expo, b), abs=1e-9)
        assert set_measure_2d(expo, a) == pytest.approx(set_measure_2d(expo, b), abs=1e-9)


def test_rotated_gaussian_invariance(gauss):
    # the Gaussian product is rotation invariant
    for th in (0.2, 0.6, math.pi / 4):
        s = CandidateSet2D("rotated", -0.8, th)
        assert set_measure_2d(gauss, s) == pytest.approx(gauss.cdf(-0.8), abs=1e-10)
        assert boundary_measure_2d(gauss, s) == pytest.approx(gauss.density(-0.8), rel=1e-9)


def test_ball_pinned(expo):
    s = match_mass(expo, "ball", 0.2)
    assert set_measure_2d(expo, s) == pytest.approx(0.2, abs=1e-9)
    assert boundary_measure_2d(expo, s) == pytest.approx(BALL_02, abs=1e-4)


def test_ball_monte_carlo(expo):
    r = match_mass(expo, "ball", 0.2).param
    h = 0.01
    rng = np.random.default_rng(20240101)
    hits = n = 0
    for _ in range(10):
        z = rng.laplace(size=(2_000_000, 2))
        d = np.hypot(z[:, 0], z[:, 1])
        hits += np.count_nonzero(np.abs(d - r) < h)
        n += d.size
    assert hits / n / (2 * h) == pytest.approx(BALL_02, rel=0.005)


def test_gaussian_halfplane_minimal(gauss):
    for a in (0.1, 0.2, 0.3, 0.5):
        tab = compare_candidates(gauss, a)
        assert tab.halfplane_over_best == pytest.approx(1.0, abs=1e-3)
        assert all(r["mass"] == pytest.approx(a, abs=1e-9) for r in tab.rows)


def test_exponential_K_direction(expo):
    tab = compare_candidates(expo, 0.2)
    assert L_at(expo.potential, 0.2) == pytest.approx(0.2)
    K = tab.empirical_K
    assert 0 < K <= 1 + 1e-12
    pinned = compare_candidates(expo, 0.2, K=K)
    assert pinned.above_K_L
    assert all(r["boundary"] >= K * 0.2 - 1e-12 for r in pinned.rows)


def test_halfplane_at_half(expo):
    tab = compare_candidates(expo, 0.5)
    assert tab.halfplane_boundary == pytest.approx(expo.density(0.0), rel=1e-12)


def test_candidate_errors(expo):
    with pytest.raises(ValueError):
        CandidateSet2D("triangle", 1.0)
    with pytest.raises(ValueError):
        set_measure_2d(expo, CandidateSet2D("square", 2 * expo.X))
    with pytest.raises(ValueError):
        compare_candidates(expo, 0.7)


def test_csv_and_dict(expo):
    tab = compare_candidates(expo, 0.3, thetas=[0.3])
    lines = tab.to_csv().splitlines()
    assert lines[0] == "shape,parameter,mass,boundary,ratio_to_halfplane"
    assert len(lines) == 1 + len(tab.rows)
    d = tab.to_dict()
    assert d["summary"]["min_shape"] == tab.best["shape"]
    # for the exponential product a tilted half-plane can beat the coordinate one
    assert d["summary"]["halfplane_over_min"] >= 1.0


def test_comparison_report():
    m1 = measure({"family": "power", "p": 1.5})
    m2 = measure({"family": "power", "p": 1.0})
    rep = comparison_report(m1, m2, [0.1, 0.3], np.geomspace(1e-6, 0.5, 60))
    assert rep["domination_constant"] > 0
    assert isinstance(rep["observed"], bool)
    assert len(rep["masses"]) == 2
