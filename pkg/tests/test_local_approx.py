import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from cuspwidth.errors import EvaluationError, ParameterError
from cuspwidth.local_approx import (
    Box,
    Column,
    FieldOracle,
    PolyBasis,
    adaptive_approximate,
    cell_error,
    cosine_field,
    evaluate_poly,
    lq_norm,
    project_cell,
    seminorm,
    subtree_ratio,
)
from cuspwidth.partition import build_tree

UNIT2 = Box([0.0, 0.0], [1.0, 1.0])
UNIT3 = Box([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
XD = FieldOracle(lambda x: x[:, -1], poly_degree=1, name="xd")


@pytest.fixture(scope="module")
def tree2(cusp2):
    return build_tree(cusp2, 20)


class TestBasis:
    @pytest.mark.parametrize("r,dim", [(1, 2), (2, 2), (3, 2), (2, 3), (4, 3), (5, 1)])
    def test_gram_identity(self, r, dim):
        assert np.abs(PolyBasis(r, dim).gram() - np.eye(r**dim)).max() < 1e-12

    def test_size_and_constant(self):
        b = PolyBasis(3, 2)
        assert b.size == 9
        assert np.allclose(b.evaluate(np.random.default_rng(0).random((5, 2)))[:, 0], 1.0)

    def test_bad(self):
        with pytest.raises(ParameterError):
            PolyBasis(0, 2)


class TestProjection:
    def test_constant(self):
        cell = Box([0.2, 1.0], [0.4, 1.5])
        c = project_cell(FieldOracle.constant(3.0), cell, 3)
        assert c[0] == pytest.approx(3.0) and np.abs(c[1:]).max() < 1e-13
        assert cell_error(FieldOracle.constant(3.0), c, cell, 2) < 1e-12

    def test_bilinear_reproduced(self):
        f = FieldOracle(lambda x: x[:, 0] * x[:, 1], poly_degree=1)
        cell = Box([0.1, 0.3], [0.6, 0.4])
        c = project_cell(f, cell, 2)
        e = cell_error(f, c, cell, 2)
        assert e < 1e-12 and not e.estimated

    def test_xd_best_constant(self):
        c = project_cell(XD, UNIT2, 1)
        assert c[0] == pytest.approx(0.5, abs=1e-15)
        assert cell_error(XD, c, UNIT2, 2) == pytest.approx(1 / math.sqrt(12), rel=1e-12)
        assert cell_error(XD, c, UNIT2, math.inf) == pytest.approx(0.5, abs=1e-12)

    def test_non_finite(self):
        f = FieldOracle(lambda x: np.log(x[:, 0] - 0.5))
        with pytest.raises(EvaluationError), np.errstate(invalid="ignore"):
            project_cell(f, UNIT2, 1)

    def test_bad_q(self):
        with pytest.raises(ParameterError):
            cell_error(XD, [0.5], UNIT2, 0.5)
        with pytest.raises(ParameterError):
            lq_norm(XD, UNIT2, 0.9)

    def test_idempotence(self):
        f = FieldOracle(lambda x: np.exp(x[:, 0]) * np.sin(3 * x[:, 1]))
        cell = Box([0.2, 0.1], [0.7, 0.3])
        c1 = project_cell(f, cell, 3)
        g = FieldOracle(lambda x: evaluate_poly(c1, cell, x, 3))
        assert np.abs(project_cell(g, cell, 3) - c1).max() < 1e-10

    def test_affine_covariance(self):
        cell = Box([0.2, 1.1, 0.0], [0.45, 1.3, 0.125])
        f = FieldOracle(lambda x: np.cos(x[:, 0] + 2 * x[:, 1]) + x[:, 2] ** 3)
        pulled = FieldOracle(lambda y: f(cell.denormalize(y)))
        assert np.abs(project_cell(f, cell, 2) - project_cell(pulled, UNIT3, 2)).max() < 1e-10

    def test_best_approximation(self):
        f = FieldOracle(lambda x: np.exp(x[:, 0] * x[:, 1]))
        cell = Box([0.0, 0.5], [0.5, 1.0])
        c = project_cell(f, cell, 2)
        base = cell_error(f, c, cell, 2)
        rng = np.random.default_rng(5)
        for _ in range(10):
            pert = c.copy()
            pert[rng.integers(c.size)] += rng.normal() * 1e-3
            assert cell_error(f, pert, cell, 2) > base


class TestNorms:
    def test_examples(self):
        one = FieldOracle.constant(1.0)
        assert lq_norm(one, [Box([0, 0], [1, 0.5])], 2) == pytest.approx(math.sqrt(0.5))
        assert lq_norm(one, UNIT2, math.inf) == 1.0
        assert lq_norm(XD, UNIT2, 2) == pytest.approx(1 / math.sqrt(3), rel=1e-13)

    def test_column_volume_and_norm(self, cusp2):
        # closed form: Γ ⊂ [1/6, 5/6] with 2^j gaps of length λ^j/3 (λ = 1/4),
        # and ∫ dist^{1/3} over a gap of length L is (3/2)(L/2)^{4/3}
        a = 1.5 * (1 / 6) ** (4 / 3)
        vol = 2 - (a + a / (1 - 2 * 4 ** (-4 / 3)))
        quad, _ = integrate.quad(lambda t: float(cusp2.psi([t])), 0, 1, limit=400)
        assert quad == pytest.approx(vol, rel=1e-12)
        col = Column(cusp2, cusp2.base_lo, cusp2.base_hi, 0.0, 0)
        # Gauss pieces straddling the cusp singularity converge only
        # algebraically; the composite rule is accurate to a few 1e-6
        assert col.volume == pytest.approx(vol, rel=1e-5)
        assert lq_norm(FieldOracle.constant(1.0), col, 1, order=16) == pytest.approx(vol, rel=1e-5)

    def test_error_additivity(self):
        f = FieldOracle(lambda x: np.sin(4 * x[:, 0]) * x[:, 1])
        halves = UNIT2.split()
        # q = 4 keeps |residual|^q smooth, so both Gauss rules converge fast
        total = cell_error(f, project_cell(f, UNIT2, 1), UNIT2, 4, order=20)
        resid = FieldOracle(lambda x: f(x) - project_cell(f, UNIT2, 1)[0])
        assert lq_norm(resid, halves, 4, order=20) \
            == pytest.approx(float(total), rel=1e-10)

    def test_seminorm_cosine(self, cusp2):
        f = cosine_field(cusp2, 1, 2)
        col = Column(cusp2, cusp2.base_lo, cusp2.base_hi, 0.0, 0)
        assert f.seminorm == 1.0
        assert seminorm(f, col, 2, 16) == pytest.approx(1.0, rel=1e-6)


class TestAdaptive:
    def test_budget_one(self, tree2, cusp2):
        f = cosine_field(cusp2, 1)
        res = adaptive_approximate(f, tree2, 1, 1)
        col = Column(cusp2, cusp2.base_lo, cusp2.base_hi, 0.0, 0)
        assert len(res.poly) == 1
        assert res.error == pytest.approx(float(cell_error(f, project_cell(f, col, 1), col, 2)))

    def test_monotone_and_budget(self, tree2, cusp2):
        f = cosine_field(cusp2, 1)
        res = adaptive_approximate(f, tree2, 200, 1)
        assert len(res.poly) <= 200
        errs = [e for _, e in res.history]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))
        assert res.error == pytest.approx(res.history[-1][1], rel=1e-6)
        assert res.fringe_defect <= res.error

    def test_error_additivity(self, tree2, cusp2):
        f = cosine_field(cusp2, 1)
        res = adaptive_approximate(f, tree2, 64, 1, q=2)
        parts = [cell_error(f, c, reg, 2) ** 2 for reg, c in res.poly.pieces]
        assert math.fsum(parts) ** 0.5 == pytest.approx(res.error, rel=1e-10)

    def test_pieces_disjoint(self, tree2, cusp2):
        f = cosine_field(cusp2, 1)
        res = adaptive_approximate(f, tree2, 64, 1)
        rng = np.random.default_rng(0)
        x = np.column_stack([rng.random(5000), 2 * rng.random(5000)])
        x = x[cusp2.contains(x)]
        hits = sum(reg.contains(x).astype(int) for reg, _ in res.poly.pieces)
        assert hits.max() == 1

    def test_bad_budget(self, tree2):
        with pytest.raises(ParameterError):
            adaptive_approximate(XD, tree2, 0, 1)

    def test_sup_norm_path(self, tree2, cusp2):
        f = cosine_field(cusp2, 1)
        res = adaptive_approximate(f, tree2, 32, 1, q=math.inf)
        errs = [e for _, e in res.history]
        assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_lemma2_ratio_bounded(cusp2, tree2):
    f = cosine_field(cusp2, 1)
    ratios = []
    for k in range(7):
        count = 2 ** tree2.resolution(k)[0]
        for j in np.unique(np.linspace(0, count - 1, 3).astype(np.int64)):
            ratios.append(subtree_ratio(f, tree2, k, int(j), 1, 2, 2))
    ratios = np.asarray(ratios)
    assert np.all(np.isfinite(ratios))
    assert ratios.max() < 10.0


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_bilinear_reproduction_property(a, b, c, e):
    f = FieldOracle(lambda x: a + b * x[:, 0] + c * x[:, 1] + e * x[:, 0] * x[:, 1], poly_degree=1)
    cell = Box([0.3, 1.2], [0.55, 1.7])
    coef = project_cell(f, cell, 2)
    x = cell.denormalize(np.random.default_rng(1).random((20, 2)))
    assert np.allclose(evaluate_poly(coef, cell, x, 2), f(x), atol=1e-11)
