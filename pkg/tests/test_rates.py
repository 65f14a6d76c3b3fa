import math
from fractions import Fraction as F

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cuspwidth.errors import DegenerateError, InfeasibleError, OutOfRangeError, ParameterError
from cuspwidth.rates import (
    ParamSet,
    SlowVariation,
    embedding_ok,
    entropy_exponents,
    fraction_str,
    hset_exponents,
    predict,
    q_hat,
    solve_scale,
    tau_factor,
    width_exponents,
)


def oracle_alphas(p, q, r, d, sigma):
    """Direct transcription: α₁ = r/d, α₂ = (r + 1/q − 1/p)/(σ(d−1))."""
    ip, iq = F(1) / p, F(1) / q
    return F(r, d), (r + iq - ip) / (sigma * (d - 1))


class TestEntropy:
    def test_example_p2q2(self):
        pr = entropy_exponents(ParamSet(2, 2, 1, 2, 3))
        assert (pr.alpha1, pr.alpha2, pr.j_star, pr.exponent) == (F(1, 2), F(1, 3), 2, F(-1, 3))

    def test_example_p2q4(self):
        pr = entropy_exponents(ParamSet(2, 4, 3, 2, 2))
        assert (pr.alpha1, pr.alpha2, pr.j_star) == (F(3, 2), F(11, 8), 2)

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            entropy_exponents(ParamSet(2, 2, 2, 2, 2))

    def test_infeasible_embedding(self):
        # r + (σ(d−1)+1)(1/q − 1/p) = 1 + 4·(0 − 1) < 0
        with pytest.raises(InfeasibleError):
            entropy_exponents(ParamSet(1, "inf", 1, 2, 3))

    def test_p_above_q(self):
        with pytest.raises(InfeasibleError):
            ParamSet(4, 2, 1, 2, 2)

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 5), st.integers(2, 5),
           st.integers(2, 12), st.integers(1, 4))
    def test_against_oracle(self, pn, dq, r, d, sn, sd):
        p, q, sigma = F(pn + 1, 1), F(pn + 1 + dq, 1), F(sn, sd)
        assume(sigma >= 1)
        ps = ParamSet(p, q, r, d, sigma)
        assume(embedding_ok(ps))
        a1, a2 = oracle_alphas(p, q, r, d, sigma)
        if a1 == a2:
            with pytest.raises(DegenerateError):
                entropy_exponents(ps)
            return
        pr = entropy_exponents(ps)
        assert (pr.alpha1, pr.alpha2) == (a1, a2)
        assert pr.exponent == -min(a1, a2)
        assert pr.j_star == (1 if a1 < a2 else 2)
        assert entropy_exponents(ps) == pr  # bit-identical re-evaluation

    def test_regime_flip_at_crossover(self):
        p, q, r, d = 2, 3, 2, 3
        gap = F(1, 3) - F(1, 2)
        crossover = (r + gap) * d / (r * (d - 1))
        lo, hi = 1.0, 2.0  # embedding holds on the whole bracket; crossover 11/8
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            try:
                j = entropy_exponents(ParamSet(p, q, r, d, mid)).j_star
            except DegenerateError:
                lo = hi = mid
                break
            if j == 1:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        assert abs(lo - float(crossover)) < 1e-12
        assert entropy_exponents(ParamSet(p, q, r, d, crossover - F(1, 10**9))).j_star == 1
        assert entropy_exponents(ParamSet(p, q, r, d, crossover + F(1, 10**9))).j_star == 2
        with pytest.raises(DegenerateError):
            entropy_exponents(ParamSet(p, q, r, d, crossover))


class TestWidths:
    def test_kolmogorov_case2(self):
        pr = width_exponents(ParamSet(2, 4, 3, 2, 2, "kolmogorov"))
        assert pr.q_hat == 4
        assert pr.thetas == (F(3, 2), F(5, 2), F(11, 8), F(9, 4))
        assert pr.j_star == 3 and pr.exponent == F(-11, 8) and pr.tau_kind == "tau2"
        assert pr.magnitude == F(9, 8)

    def test_gelfand_case1(self):
        pr = width_exponents(ParamSet(2, 3, 2, 2, 3, "gelfand"))
        assert pr.q_hat == 2 and pr.thetas is None
        assert pr.alpha2 == F(11, 18) and pr.alpha1 == 1
        assert pr.exponent == F(-4, 9)

    def test_linear_p_equals_q(self):
        pr = width_exponents(ParamSet(2, 2, 1, 2, 3, "linear"))
        assert pr.q_hat == 2 and pr.exponent == F(-1, 3)

    def test_infinite_rejected(self):
        with pytest.raises(InfeasibleError):
            width_exponents(ParamSet(2, "inf", 3, 2, 2, "kolmogorov"))
        with pytest.raises(InfeasibleError):
            width_exponents(ParamSet(1, 2, 3, 2, 2, "kolmogorov"))

    def test_entropy_kind_rejected(self):
        with pytest.raises(ParameterError):
            width_exponents(ParamSet(2, 2, 1, 2, 3))

    @given(st.fractions(F(11, 10), F(10)), st.fractions(F(0), F(10)))
    def test_q_hat_table(self, p, dq):
        q = p + dq
        pc = p / (p - 1)
        assert q_hat(ParamSet(p, q, 1, 2, 1)) is None
        assert q_hat(ParamSet(p, q, 1, 2, 1, "kolmogorov")) == q
        assert q_hat(ParamSet(p, q, 1, 2, 1, "linear")) == min(q, pc)
        assert q_hat(ParamSet(p, q, 1, 2, 1, "gelfand")) == pc


class TestHset:
    def test_general(self):
        pr = hset_exponents(ParamSet(2, 2, 2, 3, 2, theta=1))
        assert pr.magnitude == 1 and pr.alpha2 == 1 and pr.alpha1 == F(2, 3)
        assert pr.j_star == 1 and pr.exponent == F(-2, 3)

    def test_plane_vs_general(self):
        plane = hset_exponents(ParamSet(2, 4, 2, 3, 2, theta=1), "plane")
        general = hset_exponents(ParamSet(2, 4, 2, 3, 2, theta=1))
        assert plane.magnitude == 1
        assert general.magnitude == F(3, 8)
        assert plane.magnitude > general.magnitude
        assert general.generic is not None

    def test_plane_needs_integer(self):
        with pytest.raises(ParameterError):
            hset_exponents(ParamSet(2, 2, 2, 3, 2, theta=F(1, 2)), "plane")

    @given(st.integers(1, 4), st.integers(2, 5), st.fractions(F(1), F(5)),
           st.fractions(F(1, 10), F(1)), st.fractions(F(11, 10), F(6)), st.fractions(F(0), F(4)))
    def test_theorem3_dominance(self, r, d, sigma, tfrac, p, dq):
        theta = tfrac * (d - 1)
        assume(theta < d - 1)
        ps = ParamSet(p, p + dq, r, d, sigma, theta=theta)
        assume(embedding_ok(ps))
        from cuspwidth.rates import hset_magnitude
        generic = (r + ps.gap * (ps.gamma + 1)) / ps.gamma
        assert hset_magnitude(ps) >= generic

    @given(st.integers(1, 4), st.integers(3, 6), st.fractions(F(11, 10), F(5)),
           st.fractions(F(11, 10), F(6)), st.fractions(F(1, 10), F(4)))
    def test_example1_dominance(self, r, d, sigma, p, dq):
        from cuspwidth.rates import hset_magnitude
        for theta in range(1, d - 1):
            ps = ParamSet(p, p + dq, r, d, sigma, theta=theta)
            assume(embedding_ok(ps))
            assert hset_magnitude(ps, "plane") > hset_magnitude(ps, "general")


class TestScale:
    def test_pure_power(self):
        assert solve_scale(2, lambda t: 1.0, 16) == pytest.approx(4.0, rel=1e-10)
        assert solve_scale(1, lambda t: 1.0, 123.5) == pytest.approx(123.5, rel=1e-10)

    def test_log_factor(self):
        u = lambda t: 1 / math.log(math.e * t)  # noqa: E731
        t = solve_scale(2, u, 100)
        assert t == pytest.approx(20.0, rel=2e-3)
        assert abs(t**2 * u(t) - 100) <= 1e-10 * 100

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            solve_scale(1, lambda t: 1.0, 1e30)
        with pytest.raises(OutOfRangeError):
            solve_scale(1, lambda t: 10.0, 2.0)

    def test_tau_constant(self):
        ps = ParamSet(2, 3, 2, 2, 3)
        assert all(tau_factor(ps, n) == pytest.approx(1.0, rel=1e-9) for n in (2, 64, 2**20))

    def test_tau_log(self):
        lam = SlowVariation("log_power", 1.0)
        ps = ParamSet(2, 2, 2, 2, 3, lambda_fn=lam)
        n = 2.0**20
        t = solve_scale(3, lam.psi, n)
        assert abs(t**3 * lam.psi(t) - n) <= 1e-8 * n
        phi = t / n ** (1 / 3)
        assert tau_factor(ps, n) == pytest.approx(phi**-2, rel=1e-12)

    @given(st.integers(1, 40))
    def test_slow_variation(self, j):
        lam = SlowVariation("log_power", 2.0)
        assert abs(lam.log_derivative(2.0**-j)) <= 2.0 / (1 + j * math.log(2)) + 1e-15

    def test_parse(self):
        assert SlowVariation.parse("const") == SlowVariation()
        assert SlowVariation.parse("logpow:1.5") == SlowVariation("log_power", 1.5)
        with pytest.raises(ParameterError):
            SlowVariation.parse("nonsense")


def test_fraction_str():
    assert fraction_str(F(11, 8)) == "11/8"
    assert fraction_str(F(2)) == "2"
    assert fraction_str(math.inf) == "inf"


def test_predict_dispatch():
    assert predict(ParamSet(2, 2, 1, 2, 3)).width_kind == "entropy"
    assert predict(ParamSet(2, 2, 1, 2, 3, "linear")).width_kind == "linear"
