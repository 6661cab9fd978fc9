import math
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randlimits.graphs import Digraph, Multigraph, double_to_digraph, sample_regular_multigraph
from randlimits.ktheory import (
    FiniteAbelianGroup,
    HypothesisError,
    PreconditionError,
    k_groups,
    minors_gcd_oracle,
    n_of_group,
    odd_product,
    partitions_up_to,
    smith_normal_form,
    sylow_component,
    wood_limit_probability,
)


def float_det(m):
    return int(round(np.linalg.det(np.array(m, dtype=float))))


class TestSmith:
    def test_example(self):
        snf = smith_normal_form([[-1, 3], [3, -1]])
        assert snf.invariant_factors == (1, 8)
        assert minors_gcd_oracle([[-1, 3], [3, -1]]) == snf

    def test_identity_and_zero(self):
        assert smith_normal_form(np.eye(5, dtype=int)).invariant_factors == (1,) * 5
        z = smith_normal_form(np.zeros((3, 4), dtype=int))
        assert z.invariant_factors == () and z.nullity == 4 and z.corank == 3

    def test_oracle_examples(self):
        assert minors_gcd_oracle([[2, 0], [0, 3]]).invariant_factors == (1, 6)
        low = minors_gcd_oracle([[1, 1], [1, 1]])
        assert low.invariant_factors == (1,) and low.nullity == 1

    def test_random_sweep(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            m = rng.integers(-5, 6, (4, 4))
            assert smith_normal_form(m) == minors_gcd_oracle(m)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 5).flatmap(
        lambda r: st.integers(1, 5).flatmap(lambda c: arrays(np.int64, (r, c), elements=st.integers(-9, 9)))
    ))
    def test_matches_oracle(self, m):
        snf = smith_normal_form(m)
        assert snf == minors_gcd_oracle(m)
        d = snf.invariant_factors
        assert all(b % a == 0 for a, b in zip(d, d[1:]))

    def test_det_product(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            m = rng.integers(-20, 21, (6, 6))
            det = float_det(m)
            if det:
                assert math.prod(smith_normal_form(m).invariant_factors) == abs(det)

    def test_big_entries(self):
        m = np.array([[10**30, 3], [7, 10**25]], dtype=object)
        snf = smith_normal_form(m)
        assert snf.invariant_factors == (1, abs(10**55 - 21))


class TestGroups:
    def test_normalise(self):
        assert FiniteAbelianGroup.from_cyclic([4, 6, 9]).torsion == (6, 36)

    def test_sylow(self):
        g = FiniteAbelianGroup.from_cyclic([8, 3])
        assert sylow_component(g, 2).torsion == (8,)
        assert sylow_component(FiniteAbelianGroup(), 3).is_trivial
        assert sylow_component(FiniteAbelianGroup.from_cyclic([12]), 3).torsion == (3,)

    def test_primary(self):
        g = FiniteAbelianGroup(0, (6, 36))
        assert g.primary_decomposition() == {2: (2, 1), 3: (2, 1)}
        assert str(g) == "Z/6 + Z/36" and str(FiniteAbelianGroup()) == "0"

    def test_bad_chain(self):
        with pytest.raises(ValueError):
            FiniteAbelianGroup(0, (4, 6))


class TestKGroups:
    def test_triple_edge(self):
        k = k_groups(double_to_digraph(Multigraph(2, ((0, 1),) * 3)))
        assert k.k0.torsion == (8,) and k.k0.free_rank == 0 and k.k1_rank == 0

    def test_two_loops(self):
        k = k_groups(Digraph(np.array([[2]])))
        assert k.k0.is_trivial and k.k1_rank == 0

    def test_sink(self):
        with pytest.raises(PreconditionError):
            k_groups(Digraph.from_edges(2, [(0, 1)]))

    def test_ranks_agree(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            g = sample_regular_multigraph(int(rng.choice([4, 6, 8])), int(rng.integers(1, 4)), rng)
            k = k_groups(double_to_digraph(g))
            assert k.k0.free_rank == k.k1_rank

    def test_one_loop_rank(self):
        # A = [1]: A^t - I = 0, so K0 = K1 = Z
        k = k_groups(Digraph(np.array([[1]])))
        assert k.k0.free_rank == 1 and k.k1_rank == 1


class TestWood:
    def test_product(self):
        exact = mpmath.nprod(lambda k: 1 - mpmath.mpf(3) ** (-2 * k - 1), [0, mpmath.inf])
        assert odd_product(3) == pytest.approx(float(exact), abs=1e-12)

    def test_values(self):
        assert wood_limit_probability({3: ()}, 3) == pytest.approx(0.6390045766, abs=1e-9)
        assert wood_limit_probability({3: FiniteAbelianGroup(0, (3,))}, 3) == pytest.approx(0.2130015255, abs=1e-9)
        assert wood_limit_probability({3: (1, 1)}, 3) == pytest.approx(0.0266251907, abs=1e-9)

    def test_weights(self):
        assert n_of_group(3, ()) == 1
        assert n_of_group(3, (1,)) == F(1, 3)
        assert n_of_group(3, (1, 1)) == F(1, 24)

    def test_hypotheses(self):
        with pytest.raises(HypothesisError):
            wood_limit_probability({2: ()}, 4)
        with pytest.raises(HypothesisError):
            wood_limit_probability({3: ()}, 4)
        with pytest.raises(HypothesisError):
            wood_limit_probability({9: ()}, 3)

    def test_not_a_p_group(self):
        with pytest.raises(ValueError):
            wood_limit_probability({3: FiniteAbelianGroup(0, (6,))}, 3)

    def test_partial_sums(self):
        def partial(e):
            return sum(wood_limit_probability({3: lam}, 3) for lam in partitions_up_to(e))

        assert partial(4) <= 1
        assert partial(4) < partial(8) <= 1
        assert partial(8) > 0.9999

    @pytest.mark.slow
    def test_empirical_n50(self):
        rng = np.random.default_rng(3)
        trials = 2000
        parts = []
        for _ in range(trials):
            k0 = k_groups(double_to_digraph(sample_regular_multigraph(50, 3, rng))).k0
            parts.append(k0.partition(3))
        for lam in [(), (1,)]:
            freq = sum(p == lam for p in parts) / trials
            assert abs(freq - wood_limit_probability({3: lam}, 3)) <= 0.03
