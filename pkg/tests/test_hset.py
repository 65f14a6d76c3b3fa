import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuspwidth.errors import ParameterError
from cuspwidth.hset import HSet, build


def brute_cells(g: HSet, level: int) -> np.ndarray:
    """Level-``level`` cell centres by iterating the similarity maps directly."""
    k = g.ambient_dim
    # subcube centres v_j are the centres of the m^k congruent subcubes of Q
    v1 = (np.arange(g.m) + 0.5) / g.m
    shifts = np.array(list(itertools.product(v1, repeat=k)))
    centres = np.full((1, k), g.origin + 0.5)
    for lev in range(level):
        s = g.lam**lev
        # child of a cell of side s centred at c: c + s·(v_j − 1/2)
        centres = (centres[:, None, :] + s * (shifts[None] - 0.5)).reshape(-1, k)
    return centres


class TestBuild:
    def test_theta1_d3(self):
        g = build(1.0, 3, 3)
        assert (g.m, g.lam) == (2, 0.25)
        assert g.cell_count(3) == 64
        # h(λ^k) · m^{(d−1)k} = 1
        for k in range(1, 6):
            assert g.h(g.lam**k) * g.m ** (2 * k) == pytest.approx(1.0, rel=1e-14)

    def test_theta15_d3(self):
        g = build(1.5, 3, 2)
        assert g.m == 2
        assert g.lam == pytest.approx(2 ** (-4 / 3), rel=1e-15)
        assert g.lam == pytest.approx(0.3969, abs=1e-4) and g.lam < 0.5
        assert g.cell_count(2) == 16

    def test_plane(self):
        with pytest.raises(ParameterError):
            build(2.0, 3, 4, kind="plane")
        g = build(1.0, 4, 4, kind="plane")
        assert g.distance([0.7, 0.5, 0.5]) == 0.0
        assert g.distance([0.3, 0.9, 0.5]) == pytest.approx(0.4)

    @pytest.mark.parametrize("theta,d", [(0.0, 3), (2.0, 3), (-1, 3), (3.5, 4)])
    def test_bad_theta(self, theta, d):
        with pytest.raises(ParameterError):
            build(theta, d, 3)

    @pytest.mark.parametrize("theta,d", [(0.5, 2), (0.9, 2), (1.0, 3), (1.5, 3), (0.3, 3), (2.5, 4)])
    def test_minimal_m(self, theta, d):
        g = build(theta, d, 2)
        assert g.lam * g.m < 1
        lam_prev = (g.m - 1) ** (-(d - 1) / theta)
        assert g.m == 2 or not lam_prev < 1 / (g.m - 1)


class TestCells:
    @pytest.mark.parametrize("theta,d,level", [(1.0, 3, 3), (1.5, 3, 2), (0.5, 2, 6), (2.0, 4, 2)])
    def test_against_brute_force(self, theta, d, level):
        g = build(theta, d, level)
        centres, hw, mass = g.cells(level)
        ref = brute_cells(g, level)
        key = lambda a: np.lexsort(a.T[::-1])
        assert np.allclose(centres[key(centres)], ref[key(ref)], atol=1e-14)
        assert hw == pytest.approx(0.5 * g.lam**level)
        assert mass * len(centres) == pytest.approx(1.0, rel=1e-14)

    def test_nesting(self):
        g = build(1.0, 3, 5)
        for lev in range(g.depth):
            parents, phw, _ = g.cells(lev)
            kids, khw, _ = g.cells(lev + 1)
            inside = np.all(np.abs(kids[:, None, :] - parents[None]) + khw <= phw + 1e-14, axis=-1)
            assert np.all(inside.sum(axis=1) == 1)


class TestDistance:
    def test_centre_of_square(self):
        g = build(1.0, 3, 6)
        c, hw, _ = g.cells(1)
        oracle = np.min(np.max(np.maximum(np.abs(c - 0.5) - hw, 0.0), axis=1))
        # brute force over level-1 cells bounds from below; hand value: 1/4 − 1/8
        assert oracle == pytest.approx(0.125)
        assert g.distance([0.5, 0.5]) >= oracle - 1e-15
        # Γ sits inside the level-1 cells, so the true distance exceeds the
        # hand value by at most the level-1 half-width
        assert oracle <= g.distance([0.5, 0.5], exact=True) <= oracle + hw

    def test_exact_against_deep_cells(self):
        g = build(1.0, 3, 10)
        rng = np.random.default_rng(0)
        x = rng.random((200, 2))
        c, _, _ = g.cells(7)
        # Γ points: level-7 centres are at distance ≤ hw_7 from Γ.
        brute = np.min(np.max(np.abs(x[:, None, :] - c[None]), axis=-1), axis=1)
        exact = g.distance(x, exact=True)
        assert np.all(np.abs(exact - brute) <= 0.5 * g.lam**7 + 1e-14)

    def test_cell_centres_near_zero(self):
        g = build(1.0, 3, 6)
        c, _, _ = g.cells(6)
        assert np.all(g.distance(c) <= g.approximation_radius + 1e-15)
        assert np.all(g.distance(c, exact=True) <= g.approximation_radius + 1e-15)

    def test_approximant_within_radius(self):
        g = build(0.5, 2, 9)
        x = np.linspace(0, 1, 3001)[:, None]
        assert np.all(np.abs(g.distance(x) - g.distance(x, exact=True))
                      <= g.approximation_radius + 1e-14)


class TestRegularity:
    def test_cantor_theta1(self):
        g = build(1.0, 3, 6)
        rep = g.regularity_check(1000, [2.0**-j for j in range(1, 7)], seed=1)
        assert rep.ratio_max <= 8.0 and rep.passed

    def test_cantor_oracle_ball_mass(self):
        g = build(1.0, 3, 6)
        x = g.sample(30, np.random.default_rng(2))
        c, hw, mass = g.cells(6)
        for t in (0.5, 0.1, 0.02):
            d = np.max(np.maximum(np.abs(x[:, None, :] - c[None]) - hw, 0.0), axis=-1)
            oracle = (d <= t).sum(axis=1) * mass
            assert np.allclose(g.ball_mass(x, t), oracle)

    def test_plane_ratio_in_one_two(self):
        g = build(1.0, 3, 4, kind="plane")
        rep = g.regularity_check(500, [0.5, 0.25, 0.1, 0.01], seed=0)
        assert 1.0 - 1e-12 <= rep.ratio_min and rep.ratio_max <= 2.0 + 1e-12

    def test_total_mass(self):
        g = build(1.0, 3, 6)
        assert g.ball_mass(np.array([0.5, 0.5]), 1.0) == pytest.approx(1.0)

    def test_bad_radius(self):
        with pytest.raises(ParameterError):
            build(1.0, 3, 4).regularity_check(10, [0.0, 0.5])


def test_roundtrip():
    g = build(1.5, 3, 5, origin=-0.5)
    assert HSet.from_dict(g.to_dict()) == g


@given(st.lists(st.floats(0, 1), min_size=2, max_size=2), st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_distance_lipschitz(x, y):
    g = build(1.0, 3, 8)
    dx, dy = g.distance(x, exact=True), g.distance(y, exact=True)
    assert abs(dx - dy) <= np.max(np.abs(np.subtract(x, y))) + 1e-12


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_interval_extrema_bracket_samples(a, w):
    ax = build(0.5, 2, 12).axes[0]
    b = min(1.0, a + w * 0.3)
    lo, hi = ax.interval_extrema(a, b)
    u = np.linspace(a, b, 257)
    du = ax.dist(u)
    assert lo <= du.min() + 1e-12 and hi >= du.max() - 1e-12
    assert lo == pytest.approx(ax.interval_min(a, b), abs=1e-12)
    assert hi == pytest.approx(ax.interval_max(a, b), abs=1e-12)
