import random

import pytest

from molrewards.criteria import (
    MONOTONIC,
    RANGE,
    THRESHOLD,
    ConfigError,
    CriteriaRegistry,
    EndpointCriterion,
    endpoint_delta,
    is_liability,
    liabilities,
    load_default_registry,
    overall_score,
)

ALL_ENDPOINTS = [
    "logP", "TPSA", "MW",
    "Caco-2 permeability", "F50%", "CYP3A4 inhibitor", "CYP2D6 inhibitor",
    "P-gp substrate", "hERG blockers", "DILI", "Human hepatotoxicity",
    "AMES toxicity", "Genotoxicity", "Drug-induced neurotoxicity", "QED",
    "SA score", "GASA", "Lipinski rule",
    "HLM stability", "logS", "logD7.4", "Flexibility", "Fsp3",
]


def random_profile(rng, registry, endpoints=None):
    profile = {}
    for endpoint in endpoints or ALL_ENDPOINTS:
        criterion = registry[endpoint]
        if criterion.kind == RANGE:
            span = criterion.hi - criterion.lo
            profile[endpoint] = rng.uniform(criterion.lo - span, criterion.hi + span)
        elif endpoint == "Caco-2 permeability":
            profile[endpoint] = rng.uniform(-8.0, -3.0)
        elif criterion.kind == THRESHOLD:
            profile[endpoint] = rng.uniform(0.0, 1.0)
        else:
            profile[endpoint] = rng.uniform(-3.0, 5.0)
    return profile


class TestRegistry:
    def test_counts(self, registry):
        assert len(registry) == 23
        assert registry.kind_counts() == {RANGE: 3, THRESHOLD: 15, MONOTONIC: 5}

    def test_constants(self, registry):
        assert registry.clip_bound == 2.0
        assert registry.new_liability_penalty == 0.3
        assert registry.non_liability_weight == 0.5
        assert registry["DILI"].bonus == 2.5
        assert registry["logP"].bonus == 3.5

    def test_key_values(self, registry):
        assert (registry["logP"].lo, registry["logP"].hi) == (1.0, 3.0)
        assert registry["DILI"].threshold == 0.8
        assert registry["Caco-2 permeability"].threshold == -5.15

    def test_unknown_endpoint(self, registry):
        with pytest.raises(KeyError):
            registry["Solubility class"]

    def test_criterion_validation(self):
        with pytest.raises(ConfigError):
            EndpointCriterion(endpoint="x", kind=RANGE, direction="in-range",
                              lo=3.0, hi=1.0)
        with pytest.raises(ConfigError):
            EndpointCriterion(endpoint="x", kind=MONOTONIC, direction="higher",
                              bonus=1.0)


class TestLiabilities:
    def test_in_range_not_liability(self, registry):
        assert liabilities({"logP": 2.0}, registry) == set()

    def test_dili_above_threshold(self, registry):
        assert liabilities({"DILI": 0.9}, registry) == {"DILI"}

    def test_threshold_boundary_is_liability(self, registry):
        # "lower is better" counts the threshold itself as undesirable
        assert liabilities({"DILI": 0.8}, registry) == {"DILI"}
        assert liabilities({"DILI": 0.7999}, registry) == set()

    def test_monotonic_never_liability(self, registry):
        assert liabilities({"HLM stability": -99.0}, registry) == set()

    def test_out_of_range(self, registry):
        assert liabilities({"MW": 600.0}, registry) == {"MW"}
        assert liabilities({"TPSA": 10.0}, registry) == {"TPSA"}

    def test_unknown_endpoint_raises(self, registry):
        with pytest.raises(KeyError):
            liabilities({"made-up": 1.0}, registry)


class TestEndpointDelta:
    def test_threshold_crossing(self, registry):
        continuous, bonus = endpoint_delta(registry["DILI"], 0.9, 0.5)
        assert continuous == pytest.approx(0.5)
        assert bonus == 2.5

    def test_no_change_is_zero(self, registry):
        for endpoint in ("DILI", "logP", "HLM stability"):
            assert endpoint_delta(registry[endpoint], 0.7, 0.7) == (0.0, 0.0)

    def test_monotonic_clip(self, registry):
        continuous, bonus = endpoint_delta(registry["HLM stability"], 1.0, 10.0)
        assert continuous == 2.0
        assert bonus == 0.0

    def test_clip_is_symmetric(self, registry):
        continuous, _ = endpoint_delta(registry["HLM stability"], 10.0, 1.0)
        assert continuous == -0.9
        continuous, _ = endpoint_delta(registry["HLM stability"], 1.0, -10.0)
        assert continuous == -2.0

    def test_range_entering(self, registry):
        continuous, bonus = endpoint_delta(registry["logP"], 4.0, 2.0)
        assert continuous == pytest.approx(0.5)
        assert bonus == 3.5

    def test_range_no_bonus_when_still_outside(self, registry):
        continuous, bonus = endpoint_delta(registry["logP"], 5.0, 4.0)
        assert continuous == pytest.approx(0.5)
        assert bonus == 0.0

    def test_threshold_no_bonus_without_crossing(self, registry):
        _, bonus = endpoint_delta(registry["DILI"], 0.95, 0.85)
        assert bonus == 0.0

    def test_bonus_added_after_clip(self, registry):
        # saturated continuous term plus bonus exceeds the clip bound
        continuous, bonus = endpoint_delta(registry["F50%"], 1.0, 0.0)
        assert continuous == 2.0
        assert bonus == 2.5


class TestOverallScore:
    def test_identity_anchor_exact(self, registry):
        rng = random.Random(11)
        for _ in range(50):
            profile = random_profile(rng, registry)
            ev = overall_score(profile, dict(profile), registry)
            assert ev.score == 0.0
            assert ev.raw == 0.0

    def test_saturated_single_liability_scores_one(self, registry):
        ev = overall_score({"CYP3A4 inhibitor": 1.0}, {"CYP3A4 inhibitor": 0.0}, registry)
        assert ev.score == pytest.approx(1.0, abs=1e-9)

    def test_partial_single_liability(self, registry):
        # continuous 0.5 + bonus 2.5 over denominator (2.0 + 2.5)
        ev = overall_score({"DILI": 0.9}, {"DILI": 0.5}, registry)
        assert ev.raw == pytest.approx(3.0)
        assert ev.score == pytest.approx(3.0 / 4.5)

    def test_score_bounds_fuzzed(self, registry):
        rng = random.Random(2)
        for _ in range(300):
            a = random_profile(rng, registry)
            b = random_profile(rng, registry)
            ev = overall_score(a, b, registry)
            assert 0.0 <= ev.score <= 1.0

    def test_half_weight_gating(self, registry):
        # same numeric move, once as original liability and once not
        liability = overall_score({"DILI": 0.9}, {"DILI": 0.85}, registry)
        clean = overall_score({"DILI": 0.7}, {"DILI": 0.65}, registry)
        assert clean.contributions["DILI"] == pytest.approx(
            0.5 * liability.contributions["DILI"])

    def test_new_liability_counted_and_penalized(self, registry):
        base = {"DILI": 0.9, "QED": 0.2}
        ev = overall_score(base, {"DILI": 0.5, "QED": 0.9}, registry)
        assert ev.new_liability_count == 1
        better = overall_score(base, {"DILI": 0.5, "QED": 0.2}, registry)
        assert ev.score < better.score

    def test_monotonicity_on_liability_endpoint(self, registry):
        worse = overall_score({"DILI": 0.9}, {"DILI": 0.7}, registry)
        better = overall_score({"DILI": 0.9}, {"DILI": 0.6}, registry)
        assert better.score >= worse.score

    def test_empty_intersection_raises(self, registry):
        with pytest.raises(ValueError):
            overall_score({"DILI": 0.9}, {"QED": 0.2}, registry)

    def test_missing_endpoints_dropped_with_counter(self, registry):
        ev = overall_score({"DILI": 0.9, "QED": 0.5}, {"DILI": 0.5}, registry)
        assert ev.dropped_endpoints == 1
        assert "QED" not in ev.contributions

    def test_liability_free_original_can_score(self, registry):
        ev = overall_score({"HLM stability": 1.0}, {"HLM stability": 2.0}, registry)
        assert ev.score > 0.0


class TestConfigValidation:
    def test_wrong_endpoint_count_rejected(self, tmp_path):
        import json

        from importlib import resources

        cfg = json.loads(resources.files("molrewards.data")
                         .joinpath("admet_criteria.json").read_text())
        del cfg["threshold_criteria"]["GASA"]
        path = tmp_path / "registry22.json"
        path.write_text(json.dumps(cfg))
        from molrewards.criteria import load_registry
        with pytest.raises(ConfigError, match="expected 23 endpoints"):
            load_registry(str(path))

    def test_missing_file(self):
        from molrewards.criteria import load_registry
        with pytest.raises(ConfigError, match="no-such-file"):
            load_registry("no-such-file.json")
