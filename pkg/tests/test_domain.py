import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuspwidth.domain import BoundaryModulus, DomainSpec, modulus_eval, psi_eval
from cuspwidth.errors import ConfigurationError, DomainError, InvalidDomainError
from cuspwidth.hset import build


class TestModulus:
    def test_power_examples(self):
        assert modulus_eval(BoundaryModulus("power", 2.0, 1.0), 0.5) == 0.25
        assert modulus_eval(BoundaryModulus("power", 1.0, 1.0), 0.37) == 0.37
        assert modulus_eval(BoundaryModulus("power", 2.0, 0.3), 0.125) == pytest.approx(
            0.0046875, rel=1e-15)

    @pytest.mark.parametrize("t", [0.0, -0.1, 1.5, math.nan])
    def test_outside_unit_interval(self, t):
        with pytest.raises(DomainError):
            modulus_eval(BoundaryModulus("power", 2.0, 1.0), t)

    @pytest.mark.parametrize("m", [
        BoundaryModulus("power", 1.0, 1.0),
        BoundaryModulus("power", 2.0, 0.3),
        BoundaryModulus("power", 3.5, 1.0),
        BoundaryModulus("power_log", 2.0, 1.0, beta=1.5),
        BoundaryModulus("power_log", 2.0, 0.5, beta=-1.0),
    ])
    def test_a_star_on_log_grid(self, m):
        t = 2.0 ** -np.arange(0, 41)
        phi = m(t)
        assert np.all(phi <= m.a_star * t * (1 + 1e-12))
        assert np.all(m(2 * t[1:]) <= m.a_star * phi[1:] * (1 + 1e-12))
        assert np.all(np.diff(phi) <= 0)  # decreasing t → non-increasing φ

    def test_roundtrip(self):
        m = BoundaryModulus("power_log", 2.0, 0.5, beta=1.0)
        assert BoundaryModulus.from_dict(m.to_dict()) == m


class TestPsi:
    def test_constant(self, flat2):
        assert psi_eval(flat2, [0.3]) == 2.0
        assert flat2.contains([0.5, 1.0])
        assert not flat2.contains([0.5, 2.0])

    def test_hset_cusp_formula(self):
        dom = DomainSpec.hset_cusp(build(1.0, 3, 6, kind="plane"), 2.0)
        # dist((0.5, 0.25), plane {x2 = 1/2}) = 0.25 → ψ = 2 − 0.5
        assert psi_eval(dom, [0.5, 0.25]) == pytest.approx(1.5, abs=1e-15)
        assert not dom.contains([0.5, 0.25, 1.6])
        assert dom.contains([0.5, 0.25, 1.4])

    def test_on_set_is_two(self):
        dom = DomainSpec.hset_cusp(build(1.0, 3, 6), 1.0)
        pts = dom.hset.sample(50, np.random.default_rng(1))
        assert np.allclose(dom.psi(pts), 2.0, atol=1e-12)

    def test_missing_hset(self):
        with pytest.raises(ConfigurationError):
            DomainSpec(3, (BoundaryModulus("power", 2.0, 1.0),) * 2, "hset_cusp", 2.0)

    def test_invalid_grid(self):
        with pytest.raises(InvalidDomainError):
            DomainSpec.explicit(np.full((4,), 2.5), None)

    def test_range_in_one_two(self, cusp3, cusp2):
        for dom in (cusp3, cusp2):
            lo, hi = dom.psi_range()
            assert 1.0 <= lo <= hi <= 2.0

    def test_holder(self, cusp3, cusp2):
        assert cusp3.holder_check(10_000, seed=3)
        assert cusp2.holder_check(10_000, seed=3)

    def test_serialisation_roundtrip(self, cusp3):
        back = DomainSpec.from_dict(cusp3.to_dict())
        x = np.random.default_rng(0).random((20, 2))
        assert np.array_equal(back.psi(x), cusp3.psi(x))


class TestBoxExtrema:
    def test_against_dense_sampling(self, cusp3):
        rng = np.random.default_rng(4)
        for _ in range(20):
            lo = rng.random(2) * 0.9
            hi = lo + rng.random(2) * 0.1 + 1e-3
            g = np.stack(np.meshgrid(*[np.linspace(lo[i], hi[i], 201) for i in range(2)],
                                     indexing="ij"), -1).reshape(-1, 2)
            vals = cusp3.psi(g)
            inf_, sup_ = cusp3.box_inf(lo, hi), cusp3.box_sup(lo, hi)
            assert inf_ <= vals.min() + 1e-12
            assert sup_ >= vals.max() - 1e-12
            inf2, sup2 = cusp3.box_extrema(lo, hi)
            assert inf2 == pytest.approx(inf_, abs=1e-12)
            assert sup2 == pytest.approx(sup_, abs=1e-12)

    def test_explicit_grid_extrema_exact(self):
        rng = np.random.default_rng(5)
        dom = DomainSpec.explicit(1.0 + rng.random((9, 9)), None)
        lo, hi = np.array([0.11, 0.3]), np.array([0.52, 0.47])
        # the oracle mesh must contain the interior grid nodes (1/8 spacing)
        axes = [np.union1d(np.linspace(lo[i], hi[i], 401),
                           np.arange(9)[(np.arange(9) / 8 > lo[i]) & (np.arange(9) / 8 < hi[i])] / 8)
                for i in range(2)]
        g = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)
        vals = dom.psi(g)
        assert dom.box_inf(lo, hi) == pytest.approx(vals.min(), abs=1e-12)
        assert dom.box_sup(lo, hi) == pytest.approx(vals.max(), abs=1e-12)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.0, 2.0), st.floats(0.0, 1.0))
def test_contains_monotone_in_height(x1, x2, s, frac):
    dom = DomainSpec.hset_cusp(build(1.0, 3, 5), 2.0)
    if dom.contains([x1, x2, s]) and s * frac > 0:
        assert dom.contains([x1, x2, s * frac])
