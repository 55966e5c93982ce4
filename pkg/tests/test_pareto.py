import math
import random

import numpy as np
import pytest

from molrewards.pareto import (
    BalanceConfig,
    ObjectiveVector,
    RunningMedianTargets,
    balance_batch,
    batch_adaptation,
    dominates,
    pareto_set,
    reweight_rewards,
    sample_weights,
)

from oracles import brute_force_pareto, scalar_raw_weight


def random_batch(rng, n, binding_span=(-10.0, 0.0)):
    out = np.empty((n, 6))
    out[:, :5] = rng.random((n, 5))
    out[:, 5] = rng.uniform(*binding_span, size=n)
    return out


class TestDominance:
    def test_equal_vectors(self):
        a = ObjectiveVector(0.5, 0.5, 0.5, 0.5, 0.5, 6.0)
        assert not dominates(a, a)

    def test_epsilon_improvement(self):
        a = [0.5, 0.5, 0.5, 0.5, 0.5, 6.0]
        b = [0.5 + 1e-9, 0.5, 0.5, 0.5, 0.5, 6.0]
        assert dominates(b, a)
        assert not dominates(a, b)

    def test_incomparable(self):
        a = [1.0, 0.0, 0.5, 0.5, 0.5, 6.0]
        b = [0.0, 1.0, 0.5, 0.5, 0.5, 6.0]
        assert not dominates(a, b)
        assert not dominates(b, a)


class TestParetoSet:
    def test_all_identical(self):
        vectors = [[0.5, 0.5, 0.5, 0.5, 0.5, 6.0]] * 7
        assert pareto_set(vectors) == set(range(7))

    def test_single_dominator(self):
        vectors = [[0.9, 0.9, 0.9, 0.9, 0.9, 9.0],
                   [0.1, 0.2, 0.3, 0.4, 0.5, 5.0],
                   [0.5, 0.1, 0.2, 0.3, 0.4, 4.0]]
        assert pareto_set(vectors) == {0}

    def test_two_channel_hand_case(self):
        pad = [0.5, 0.5, 0.5, 0.0]
        vectors = [[1, 0] + pad, [0, 1] + pad, [0.5, 0.5] + pad, [0.2, 0.2] + pad]
        assert pareto_set(vectors) == {0, 1, 2}

    def test_matches_brute_force(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            batch = random_batch(rng, int(rng.integers(1, 80)))
            assert pareto_set(batch) == brute_force_pareto(batch.tolist())

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(23)
        transforms = [lambda x: x, np.exp, lambda x: x ** 3 + x,
                      lambda x: 2.0 * x + 1.0, np.tanh]
        for _ in range(20):
            batch = random_batch(rng, 40)
            reference = pareto_set(batch)
            chosen = [transforms[int(rng.integers(len(transforms)))] for _ in range(6)]
            mapped = np.column_stack([f(batch[:, k]) for k, f in enumerate(chosen)])
            assert pareto_set(mapped) == reference


class TestSampleWeights:
    def test_all_on_front_gives_unit_weights(self):
        vectors = [[0.5, 0.5, 0.5, 0.5, 0.5, 6.0]] * 5
        raw, weights = sample_weights(vectors)
        assert np.all(raw == 1.3)
        assert np.allclose(weights, 1.0)

    def test_front_members_get_exact_boost(self):
        rng = np.random.default_rng(3)
        config = BalanceConfig(boost=1.3)
        for _ in range(20):
            batch = random_batch(rng, 30)
            front = pareto_set(batch)
            raw, _ = sample_weights(batch, config)
            for i in front:
                assert raw[i] == config.boost

    def test_zero_distance_identity(self):
        # the decay factor at zero distance equals the boost itself
        config = BalanceConfig(boost=1.3, decay=2.0)
        assert scalar_raw_weight([0.0, 0.0], config.boost, config.decay) \
            == pytest.approx(config.boost ** 2)

    def test_dominated_weights_match_scalar_formula(self):
        config = BalanceConfig(boost=1.3, decay=2.0)
        batch = np.array([
            [0.9, 0.9, 0.9, 0.9, 0.9, 9.0],
            [0.6, 0.5, 0.4, 0.3, 0.2, 3.0],
            [0.2, 0.1, 0.3, 0.2, 0.1, 1.0],
        ])
        raw, weights = sample_weights(batch, config)
        front = sorted(pareto_set(batch))
        # binding rescaled by batch min-max before distances
        scaled = batch.copy()
        lo, hi = batch[:, 5].min(), batch[:, 5].max()
        scaled[:, 5] = (batch[:, 5] - lo) / (hi - lo)
        for i in range(3):
            if i in front:
                continue
            d1 = min(math.dist(scaled[i, :3], scaled[j, :3]) for j in front)
            d2 = min(math.dist(scaled[i, 3:], scaled[j, 3:]) for j in front)
            assert raw[i] == pytest.approx(
                scalar_raw_weight([d1, d2], config.boost, config.decay))
        assert weights.mean() == pytest.approx(1.0, abs=1e-9)

    def test_mean_normalization(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            batch = random_batch(rng, int(rng.integers(1, 60)))
            _, weights = sample_weights(batch)
            assert abs(weights.mean() - 1.0) <= 1e-9

    def test_dominated_below_squared_boost(self):
        rng = np.random.default_rng(9)
        config = BalanceConfig()
        for _ in range(20):
            batch = random_batch(rng, 40)
            raw, _ = sample_weights(batch, config)
            front = pareto_set(batch)
            for i in range(40):
                if i not in front:
                    assert raw[i] < config.boost ** 2 + 1e-12


class TestBatchAdaptation:
    def test_neutral_when_targets_met(self):
        batch = np.tile([[0.8, 0.8, 0.8, 0.8, 0.8, 8.0]], (4, 1))
        scales, boosts = batch_adaptation(batch, targets=np.full(6, 0.5))
        assert np.all(boosts == 1.0)
        assert np.all(scales == 1.0)

    def test_cap_binds_at_quarter_target(self):
        batch = np.tile([[0.1] * 6], (4, 1))
        scales, boosts = batch_adaptation(batch, targets=np.full(6, 0.4))
        assert np.all(boosts == 1.5)

    def test_uncapped_shortfall_boost(self):
        batch = np.tile([[0.25] * 6], (4, 1))
        scales, boosts = batch_adaptation(batch, targets=np.full(6, 0.36))
        assert boosts[0] == pytest.approx((0.36 / 0.25) ** 0.5)

    def test_zero_mean_hits_cap(self):
        batch = np.zeros((3, 6))
        scales, boosts = batch_adaptation(batch, targets=np.full(6, 0.5))
        assert np.all(boosts == 1.5)
        assert np.all(scales == 1.5)

    def test_group_scale_floor_is_one(self):
        batch = np.tile([[0.9] * 6], (4, 1))
        scales, _ = batch_adaptation(batch, targets=np.full(6, 0.1))
        assert np.all(scales == 1.0)

    def test_defaults_are_neutral(self):
        rng = np.random.default_rng(31)
        batch = random_batch(rng, 16)
        scales, boosts = batch_adaptation(batch)
        assert np.all(scales == 1.0)
        assert np.all(boosts == 1.0)


class TestReweightRewards:
    def test_identity(self):
        rewards = np.arange(18, dtype=float).reshape(6, 3)
        out = reweight_rewards(rewards, np.ones(3), np.ones(6), np.ones(2))
        assert np.array_equal(out, rewards)

    def test_doubling_weight_scales_trajectory(self):
        rewards = np.ones((6, 2))
        out = reweight_rewards(rewards, np.array([2.0, 1.0]), np.ones(6), np.ones(2))
        assert np.all(out[:, 0] == 2.0)
        assert np.all(out[:, 1] == 1.0)

    def test_within_group_ratios_preserved(self):
        rng = np.random.default_rng(13)
        rewards = rng.random((6, 5)) + 0.1
        weights = rng.random(5) + 0.5
        scales = np.array([1.2, 1.4])
        out = reweight_rewards(rewards, weights, np.ones(6), scales)
        for group in ((0, 1, 2), (3, 4, 5)):
            for i in range(5):
                original = rewards[group[0], i] / rewards[group[1], i]
                reweighted = out[group[0], i] / out[group[1], i]
                assert reweighted == pytest.approx(original)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            reweight_rewards(np.ones((5, 2)), np.ones(2), np.ones(6), np.ones(2))
        with pytest.raises(ValueError):
            reweight_rewards(np.ones((6, 2)), np.ones(3), np.ones(6), np.ones(2))


class TestBalanceBatch:
    def test_invariants_enforced(self):
        rng = np.random.default_rng(5)
        batch = balance_batch(random_batch(rng, 25))
        assert batch.weights.mean() == pytest.approx(1.0, abs=1e-9)
        assert np.all(batch.raw_weights > 0)
        assert 0 < batch.frontier_ratio <= 1.0

    def test_thousand_trajectory_quantile_report(self):
        from molrewards.simulate import _sample_batch, default_generator_spec

        spec = default_generator_spec(batch_size=1000)
        rng = np.random.default_rng(0)
        batch = balance_batch(_sample_batch(spec, 0, rng))
        w = batch.weights
        assert abs(w.mean() - 1.0) <= 1e-9
        p50, p90, p99 = np.percentile(w, [50, 90, 99])
        assert p50 < p90 < p99
        assert 0.0 < batch.frontier_ratio < 1.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BalanceConfig(boost=1.0)
        with pytest.raises(ValueError):
            BalanceConfig(decay=0.0)
        with pytest.raises(ValueError):
            BalanceConfig(shortfall_exponent=0.0)
        with pytest.raises(ValueError):
            BalanceConfig(boost_cap=0.9)


class TestRunningTargets:
    def test_median_of_batch_means(self):
        estimator = RunningMedianTargets()
        estimator.update(np.tile([[0.2] * 6], (3, 1)))
        targets = estimator.update(np.tile([[0.4] * 6], (3, 1)))
        assert np.allclose(targets, 0.3)
        assert np.allclose(estimator.current(), 0.3)

    def test_empty_state(self):
        assert RunningMedianTargets().current() is None


class TestObjectiveVector:
    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            ObjectiveVector(1.2, 0.5, 0.5, 0.5, 0.5, 6.0)

    def test_binding_unbounded(self):
        v = ObjectiveVector(0.5, 0.5, 0.5, 0.5, 0.5, -123.0)
        assert v.binding_utility == -123.0
