import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy import integrate, stats

from randlimits.villadsen import (
    LN2,
    BetaWalkSpec,
    ConstantQ,
    OneMinusInverseSquare,
    QTable,
    UnsupportedInputError,
    bit_probability,
    ccdf_R,
    cdf_R,
    expected_R,
    mean_factor,
    prob_zstable,
    sample_R,
    sample_R_batch,
    simulate_tame_choices,
    survival_2_pow_minus_w,
    tame_in_window_probability,
    w_density,
    zstable_probability,
)

ONE = {1: 1}


def test_bit_probability():
    assert all(bit_probability(0.0, n) == 0.5 for n in range(1, 20))
    assert bit_probability(LN2, 1) == pytest.approx(1 / (1 + math.sqrt(2)), abs=1e-12)
    assert bit_probability(200.0, 1) < 1e-40
    with pytest.raises(ValueError):
        bit_probability(1.0, 0)


class TestDensity:
    def test_uniform(self):
        assert all(w_density(0.0, x) == 1.0 for x in np.linspace(0, 1, 11))

    @pytest.mark.parametrize("beta", [-2.0, -1.0, 1.0, 2.0])
    def test_normalised(self, beta):
        total, _ = integrate.quad(lambda x: w_density(beta, x), 0, 1, epsabs=1e-13)
        assert abs(total - 1) < 1e-10

    def test_value(self):
        assert w_density(1.0, 0.0) == pytest.approx(1 / (math.e - 1), abs=1e-12)

    def test_range(self):
        with pytest.raises(ValueError):
            w_density(1.0, 1.5)

    def test_continuous_at_zero(self):
        assert w_density(1e-9, 0.3) == pytest.approx(1.0, abs=1e-8)


class TestCcdf:
    def test_below_half(self):
        for beta in (-3.0, 0.0, 0.5, 4.0):
            assert ccdf_R(BetaWalkSpec(beta, ONE), 0.4) == 1.0

    def test_uniform_examples(self):
        spec = BetaWalkSpec(0.0, ONE)
        assert ccdf_R(spec, 2 ** -0.5) == pytest.approx(0.5, abs=1e-12)
        assert ccdf_R(spec, 0.75) == pytest.approx(-math.log(0.75) / LN2, abs=1e-12)

    @pytest.mark.parametrize("beta", [-1.0, 0.0, 0.7, 3.0])
    def test_matches_density(self, beta):
        # P(2^-W >= x) = P(W <= -log2 x)
        for x in (0.55, 0.7, 0.9):
            direct, _ = integrate.quad(lambda w: w_density(beta, w), 0, -math.log2(x))
            assert survival_2_pow_minus_w(beta, x) == pytest.approx(direct, abs=1e-10)

    def test_monotone_and_breakpoints(self):
        spec = BetaWalkSpec(1.0, {F(1, 2): F(1, 2), 2: F(1, 2)})
        grid = np.linspace(0.01, 3, 600)
        values = [ccdf_R(spec, r) for r in grid]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))
        for b in (0.25, 0.5, 1.0, 2.0):
            assert ccdf_R(spec, b) == pytest.approx(ccdf_R(spec, b * (1 - 1e-12)), abs=1e-9)

    def test_cdf_atom(self):
        spec = BetaWalkSpec(0.0, {0: F(1, 4), 1: F(3, 4)})
        assert cdf_R(spec, [0.0])[0] == 0.25
        assert cdf_R(spec, [-1.0])[0] == 0.0
        assert cdf_R(spec, [5.0])[0] == 1.0


class TestMean:
    def test_special_cases(self):
        assert expected_R(BetaWalkSpec(0.0, ONE)) == pytest.approx(1 / math.log(4), abs=1e-12)
        assert expected_R(BetaWalkSpec(LN2, ONE)) == pytest.approx(LN2, abs=1e-12)

    def test_beta_one_scale_two(self):
        spec = BetaWalkSpec(1.0, {2: 1})
        assert mean_factor(1.0) == pytest.approx(0.681146, abs=1e-6)
        assert expected_R(spec) == pytest.approx(1.362292, abs=1e-6)
        quad, _ = integrate.quad(lambda r: ccdf_R(spec, r), 0, 2, points=[1.0], epsabs=1e-12)
        assert expected_R(spec) == pytest.approx(quad, abs=1e-8)

    @pytest.mark.parametrize("beta", [-2.0, 0.3, 1.0, LN2 - 1e-9, LN2 + 1e-9])
    def test_against_quadrature(self, beta):
        spec = BetaWalkSpec(beta, {F(1, 2): F(1, 3), 4: F(2, 3)})
        quad = sum(
            integrate.quad(lambda r: ccdf_R(spec, r), lo, hi, epsabs=1e-12)[0]
            for lo, hi in [(0, 0.25), (0.25, 0.5), (0.5, 2), (2, 4)]
        )
        assert abs(expected_R(spec) - quad) < 1e-6

    def test_continuity_near_singular_points(self):
        for centre in (0.0, LN2):
            assert mean_factor(centre + 1e-7) == pytest.approx(mean_factor(centre), abs=1e-6)


class TestSampling:
    def test_zero_branch(self):
        rng = np.random.default_rng(0)
        assert all(sample_R(BetaWalkSpec(0.5, {0: 1}), rng).r == 0 for _ in range(50))
        _, r = sample_R_batch(BetaWalkSpec(0.5, {0: 1}), 1000, rng)
        assert (r == 0).all()

    def test_forced_zero_bits(self):
        spec = BetaWalkSpec(-1e6, {4: 1}, bit_budget=10)
        s = sample_R(spec, np.random.default_rng(1))
        assert s.bits == (0,) * 10 and s.r == 4.0

    def test_sample_consistency(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = sample_R(BetaWalkSpec(0.3, {F(1, 4): F(1, 2), 8: F(1, 2)}), rng)
            assert 0 <= s.w < 1
            assert s.r == pytest.approx(float(s.w0) * 2 ** -s.w, rel=1e-15)

    def test_zero_frequency(self):
        spec = BetaWalkSpec(0.0, {0: F(3, 10), 1: F(7, 10)})
        n = 100_000
        _, r = sample_R_batch(spec, n, np.random.default_rng(3))
        freq = (r == 0).mean()
        pi0 = float(prob_zstable(spec))
        assert pi0 == 0.3
        assert abs(freq - pi0) <= 3 * math.sqrt(pi0 * (1 - pi0) / n)

    @pytest.mark.parametrize("beta", [0.0, LN2, -1.0])
    def test_ks(self, beta):
        spec = BetaWalkSpec(beta, ONE)
        _, r = sample_R_batch(spec, 10**6, np.random.default_rng(4))
        assert stats.kstest(r, lambda x: cdf_R(spec, x)).statistic <= 0.005
        if beta != -1.0:
            assert abs(r.mean() - expected_R(spec)) <= 0.002

    def test_seeded(self):
        spec = BetaWalkSpec(0.5, ONE)
        a = sample_R_batch(spec, 100, np.random.default_rng(5))[1]
        b = sample_R_batch(spec, 100, np.random.default_rng(5))[1]
        assert (a == b).all()


class TestSpecValidation:
    def test_not_power_of_two(self):
        with pytest.raises(ValueError):
            BetaWalkSpec(0.0, {3: 1})

    def test_weights(self):
        with pytest.raises(ValueError):
            BetaWalkSpec(0.0, {1: F(1, 2)})

    def test_budget(self):
        with pytest.raises(ValueError):
            BetaWalkSpec(0.0, ONE, bit_budget=54)

    def test_infinite_family(self):
        with pytest.raises(UnsupportedInputError):
            BetaWalkSpec(0.0, lambda k: 0)


class TestZStable:
    def test_examples(self):
        assert zstable_probability(ConstantQ(F(1, 2))) == 1
        assert zstable_probability(OneMinusInverseSquare()) == 0
        assert zstable_probability(ConstantQ(F(9, 10))) == 1
        assert zstable_probability(ConstantQ(1)) == 0

    def test_table(self):
        # tame only possible at steps 1 and 2
        family = QTable((F(1, 2), F(1, 3)), F(1))
        assert zstable_probability(family) == 0
        assert zstable_probability(QTable((F(1, 2),), F(1, 2))) == 1

    def test_partial_products(self):
        family = OneMinusInverseSquare()
        prod = F(1)
        for m in range(2, 1001):
            prod *= family(m)
            assert prod == F(m + 1, 2 * m)  # prod_{i=2}^m (1 - 1/i^2)
        for m in (2, 10, 1000):
            assert tame_in_window_probability(family, m, m + 4) == 1 - F(m - 1, m) * F(m + 5, m + 4)

    def test_window_frequencies(self):
        rng = np.random.default_rng(6)
        for family, check in [
            (ConstantQ(F(1, 2)), lambda f: f >= 0.999),
            (OneMinusInverseSquare(), lambda f: f <= 0.01),
        ]:
            tame = simulate_tame_choices(family, 1000, 10_000, rng)
            assert check(tame[:, 500:].any(axis=1).mean())
