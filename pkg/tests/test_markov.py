from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randlimits.markov import (
    AbsorptionMode,
    BoundaryModeError,
    ChainKind,
    InitialDistribution,
    Interval,
    InvalidStateError,
    RateSequence,
    RateSpec,
    Table,
    ConstantPQ,
    TransitionSpec,
    absorption_probability,
    classify_chain,
    escape_height,
    finite_hitting_oracle,
    jump_probabilities,
    max_not_exceeding_probability,
    simulate_batch,
    simulate_path,
    stay_at_most_probability,
    uniqueness_criterion,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def hit_above(spec, k, i):
    """P(max <= k) from the linear system on {-1, ..., k+1}."""
    return 1 - finite_hitting_oracle(spec, range(-1, k + 2), {k + 1}, i)


class TestJumps:
    def test_constant_family(self):
        spec = TransitionSpec.constant(F(3, 5))
        assert jump_probabilities(spec, 3) == (F(3, 5), F(2, 5))

    def test_reflecting_zero(self):
        assert jump_probabilities(TransitionSpec.constant(F(3, 5)), 0) == (1, 0)

    def test_from_rates(self):
        rates = RateSpec(RateSequence.geometric(1), RateSequence.geometric(3))
        assert jump_probabilities(TransitionSpec.from_rates(rates), 1) == (F(1, 4), F(3, 4))

    def test_negative_state(self):
        with pytest.raises(InvalidStateError):
            jump_probabilities(TransitionSpec.constant(F(1, 2)), -1)

    @given(st.fractions(min_value=F(1, 100), max_value=F(99, 100)), st.integers(0, 50))
    def test_probabilities_sum_to_one(self, p, i):
        for spec in (TransitionSpec.constant(p), TransitionSpec.constant(p, F(1, 3))):
            a, b = jump_probabilities(spec, i)
            assert a + b == 1

    def test_table_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            Table((F(3, 2),), ConstantPQ(F(1, 2)))


class TestSimulation:
    def test_upward_drift(self):
        spec = TransitionSpec.constant(1 - F(1, 10**15))
        path = simulate_path(spec, InitialDistribution.point(0), 3, rng())
        assert path.states == (0, 1, 2, 3)
        assert not path.absorbed

    def test_forced_absorption(self):
        spec = TransitionSpec.constant(F(1, 2), q0=1)
        path = simulate_path(spec, InitialDistribution.point(0), 10, rng())
        assert path.states == (0, -1) and path.absorbed

    def test_same_seed_same_path(self):
        spec = TransitionSpec.constant(F(1, 2), q0=F(1, 2))
        a = simulate_path(spec, InitialDistribution.point(3), 500, rng(9))
        b = simulate_path(spec, InitialDistribution.point(3), 500, rng(9))
        assert a == b

    def test_symmetric_walk_clt(self):
        # reflecting at 0 would bias the mean, so start far enough up
        spec = TransitionSpec.constant(F(1, 2))
        steps, trials = 10_000, 10_000
        start = np.full(trials, 10**6)
        batch = simulate_batch(spec, start, rng(1), steps)
        mean = (batch.final - start).mean()
        assert abs(mean) <= 3 * np.sqrt(steps) / np.sqrt(trials)

    def test_batch_stop_above(self):
        spec = TransitionSpec.constant(F(9, 10), q0=F(1, 10))
        batch = simulate_batch(spec, np.zeros(200, dtype=np.int64), rng(2), 1000, stop_above=5)
        assert (batch.maximum <= 6).all()
        # walks stop right after crossing the bound
        crossed = batch.maximum == 6
        assert (batch.final[crossed] == 6).all()


class TestClassification:
    @pytest.mark.parametrize(
        "p, kind",
        [(F(2, 5), ChainKind.POSITIVE_RECURRENT), (F(1, 2), ChainKind.NULL_RECURRENT), (F(3, 5), ChainKind.TRANSIENT)],
    )
    def test_examples(self, p, kind):
        assert classify_chain(TransitionSpec.constant(p)).kind is kind

    def test_fifty_values(self):
        for n in range(1, 51):
            p = F(n, 51)
            kind = classify_chain(TransitionSpec.constant(p)).kind
            expected = (
                ChainKind.POSITIVE_RECURRENT if p < F(1, 2)
                else ChainKind.NULL_RECURRENT if p == F(1, 2)
                else ChainKind.TRANSIENT
            )
            assert kind is expected

    def test_absorbing_rejected(self):
        with pytest.raises(BoundaryModeError):
            classify_chain(TransitionSpec.constant(F(1, 2), F(1, 2)))

    def test_unknown_tail_inconclusive(self):
        rates = RateSpec(RateSequence.from_function(lambda i: i + 1), RateSequence.from_function(lambda i: i and i + 2))
        assert classify_chain(TransitionSpec.from_rates(rates)).kind is ChainKind.INCONCLUSIVE

    def test_table_tail(self):
        spec = TransitionSpec(Table((F(1, 2), F(1, 5), F(1, 5)), ConstantPQ(F(7, 10))))
        assert classify_chain(spec).kind is ChainKind.TRANSIENT


class TestAbsorption:
    def test_drunkard(self):
        spec = TransitionSpec.constant(F(3, 5), F(2, 5))
        assert absorption_probability(spec, 1) == F(4, 9)

    def test_symmetric_is_certain(self):
        assert absorption_probability(TransitionSpec.constant(F(1, 2), F(1, 2)), 4) == 1

    def test_never_reach_zero(self):
        spec = TransitionSpec.constant(F(3, 5))
        assert absorption_probability(spec, 1, AbsorptionMode.NEVER_REACH_ZERO) == F(1, 3)

    def test_mode_mismatch(self):
        with pytest.raises(BoundaryModeError):
            absorption_probability(TransitionSpec.constant(F(3, 5)), 1)
        with pytest.raises(BoundaryModeError):
            absorption_probability(TransitionSpec.constant(F(3, 5), F(2, 5)), 1, AbsorptionMode.NEVER_REACH_ZERO)

    def test_geometric_rates_certified(self):
        # odds shrink geometrically, so the series only has bounds
        rates = RateSpec(RateSequence.geometric(2, 2), RateSequence.geometric(1, 1))
        value = absorption_probability(TransitionSpec.from_rates(rates), 2)
        lo, hi = (value.lo, value.hi) if isinstance(value, Interval) else (value, value)
        assert 0 <= lo <= hi <= 1 and hi - lo < F(1, 10**12)

    def test_q0_one_allows_p0_zero(self):
        spec = TransitionSpec.constant(F(3, 5), q0=1)
        assert absorption_probability(spec, 0) == 1
        # from 1: reach 0 with probability 2/3, then absorbed surely
        assert absorption_probability(spec, 1) == F(2, 3)

    def test_escape_height(self):
        spec = TransitionSpec.constant(F(3, 5), F(2, 5))
        h = escape_height(spec, 1e-6)
        assert absorption_probability(spec, h) < F(1, 10**6) <= absorption_probability(spec, h - 1)
        assert escape_height(TransitionSpec.constant(F(1, 2), F(1, 2)), 1e-6) is None


class TestBoundedMaximum:
    def test_symmetric_formula(self):
        spec = TransitionSpec.constant(F(1, 2), F(1, 2))
        assert max_not_exceeding_probability(spec, 1, 0) == F(2, 3)

    def test_start_above(self):
        spec = TransitionSpec.constant(F(1, 2), F(1, 2))
        assert max_not_exceeding_probability(spec, 3, 4) == 0

    def test_k_at_least_one(self):
        with pytest.raises(ValueError):
            max_not_exceeding_probability(TransitionSpec.constant(F(1, 2), F(1, 2)), 0, 0)

    def test_oracle_example(self):
        spec = TransitionSpec.constant(F(2, 3), F(1, 3))
        assert max_not_exceeding_probability(spec, 2, 0) == hit_above(spec, 2, 0)

    @pytest.mark.parametrize("p", [F(1, 3), F(1, 2), F(2, 3)])
    def test_oracle_sweep(self, p):
        spec = TransitionSpec.constant(p, 1 - p)
        for k in range(1, 7):
            row = [max_not_exceeding_probability(spec, k, i) for i in range(k + 2)]
            assert row == [hit_above(spec, k, i) for i in range(k + 1)] + [0]
            assert all(a >= b for a, b in zip(row, row[1:]))
            if k > 1:
                assert all(max_not_exceeding_probability(spec, k - 1, i) <= row[i] for i in range(k + 1))

    def test_complement_identity(self):
        spec = TransitionSpec.constant(F(1, 2), F(1, 2))
        hit = finite_hitting_oracle(spec, range(-1, 3), {2}, 0)
        assert hit == 1 - max_not_exceeding_probability(spec, 1, 0)

    @settings(max_examples=40, deadline=None)
    @given(st.fractions(min_value=F(1, 10), max_value=F(9, 10)), st.fractions(min_value=F(1, 10), max_value=1), st.integers(0, 5))
    def test_general_q0(self, p, q0, k):
        spec = TransitionSpec.constant(p, q0)
        for i in range(k + 1):
            assert stay_at_most_probability(spec, k, i) == hit_above(spec, k, i)


class TestOracle:
    def test_start_in_target(self):
        spec = TransitionSpec.constant(F(1, 2), F(1, 2))
        assert finite_hitting_oracle(spec, range(-1, 4), {2}, 2) == 1

    def test_unreachable(self):
        spec = TransitionSpec.constant(F(1, 2), F(1, 2))
        assert finite_hitting_oracle(spec, range(-1, 4), {3}, -1) == 0

    def test_leaving_range(self):
        spec = TransitionSpec.constant(F(1, 2), F(1, 2))
        with pytest.raises(ValueError):
            finite_hitting_oracle(spec, range(-1, 4), {2}, 3)


class TestUniqueness:
    def test_unit_rates(self):
        assert uniqueness_criterion(RateSpec(RateSequence.geometric(1), RateSequence.geometric(1))) is True

    def test_equal_geometric(self):
        assert uniqueness_criterion(RateSpec(RateSequence.geometric(1, 4), RateSequence.geometric(1, 4))) is True

    def test_summable(self):
        rates = RateSpec(RateSequence.geometric(1, 4), RateSequence.geometric(F(1, 2), 4))
        assert uniqueness_criterion(rates) is False

    def test_unknown_tail(self):
        rates = RateSpec(RateSequence.from_function(lambda i: 1), RateSequence.from_function(lambda i: 1))
        assert uniqueness_criterion(rates) is None


def test_initial_distribution_exact_sum():
    with pytest.raises(ValueError):
        InitialDistribution({0: F(1, 3), 1: F(1, 3)})
    d = InitialDistribution({0: F(1, 3), 2: F(2, 3)})
    assert d.support == [0, 2]
