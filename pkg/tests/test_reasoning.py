import json
import math

import numpy as np
import pytest

from molrewards.criteria import ConfigError
from molrewards.reasoning import (
    CriticalFailure,
    EndpointLexicon,
    JudgeError,
    JudgeSubScores,
    RemoteJudgeClient,
    RichnessConfig,
    StubJudgeClient,
    extract_mentioned_liabilities,
    fit_richness_config,
    lms_aggregate,
    make_judge,
    richness_score,
    target_property_f1,
)

LONG_TEXT = ("we replace the acetyl ester with an amide because this lowers "
             "the predicted liability and improves the metabolic profile")


class TestLexicon:
    def test_covers_all_endpoints(self, lexicon, registry):
        lexicon.check_covers(registry)

    def test_direct_hits(self, lexicon):
        found = extract_mentioned_liabilities(
            "high DILI risk and poor Caco-2 permeability", lexicon)
        assert found == {"DILI", "Caco-2 permeability"}

    def test_empty_text(self, lexicon):
        assert extract_mentioned_liabilities("", lexicon) == set()

    def test_hepatotoxicity_resolves_uniquely(self, lexicon):
        found = extract_mentioned_liabilities("hepatotoxicity concerns", lexicon)
        assert found == {"Human hepatotoxicity"}

    def test_longest_match_masks_substrings(self, lexicon):
        found = extract_mentioned_liabilities(
            "drug-induced liver injury flagged by the assay", lexicon)
        assert found == {"DILI"}

    def test_word_boundaries(self, lexicon):
        assert extract_mentioned_liabilities("catalogs and logprob", lexicon) == set()

    def test_case_insensitive(self, lexicon):
        assert extract_mentioned_liabilities("HERG blockade", lexicon) == {"hERG blockers"}

    def test_each_endpoint_reported_once(self, lexicon):
        found = extract_mentioned_liabilities("DILI, dili, and DILI again", lexicon)
        assert found == {"DILI"}

    def test_alias_uniqueness_enforced(self):
        with pytest.raises(ConfigError):
            EndpointLexicon(aliases={"A": ("shared",), "B": ("shared",)})

    def test_lowercase_enforced(self):
        with pytest.raises(ConfigError):
            EndpointLexicon(aliases={"A": ("Mixed",)})


class TestF1:
    def test_perfect(self):
        assert target_property_f1({"A", "B"}, {"A", "B"}) == 1.0

    def test_disjoint(self):
        assert target_property_f1({"A"}, {"B"}) == 0.0

    def test_half(self):
        assert target_property_f1({"A", "B"}, {"B", "C"}) == 0.5

    def test_empty_conventions(self):
        assert target_property_f1(set(), set()) == 1.0
        assert target_property_f1(set(), {"A"}) == 0.0
        assert target_property_f1({"A"}, set()) == 0.0

    def test_relabeling_invariance(self):
        mapping = {"A": "X", "B": "Y", "C": "Z"}
        mentioned, true = {"A", "B"}, {"B", "C"}
        relabeled = target_property_f1({mapping[m] for m in mentioned},
                                       {mapping[t] for t in true})
        assert relabeled == target_property_f1(mentioned, true)


class TestLms:
    def test_all_ones(self):
        assert lms_aggregate(JudgeSubScores(1, 1, 1, 1), LONG_TEXT) == 1.0

    def test_empty_reasoning_zero(self):
        assert lms_aggregate(JudgeSubScores(1, 1, 1, 1), "") == 0.0
        assert lms_aggregate(JudgeSubScores(1, 1, 1, 1), "   \n ") == 0.0

    def test_short_reasoning_zero(self):
        assert lms_aggregate(JudgeSubScores(1, 1, 1, 1), "nine words is not enough") == 0.0

    def test_critical_failure_penalty(self):
        sub = JudgeSubScores(0.8, 0.8, 0.8, 0.8,
                             frozenset({CriticalFailure.EDIT_RATIONALE_CONTRADICTION}))
        assert lms_aggregate(sub, LONG_TEXT) == pytest.approx(0.5)

    def test_flagged_rationale_capped(self):
        sub = JudgeSubScores(1, 1, 1, 1,
                             frozenset({CriticalFailure.SEVERE_CHEMICAL_MISCONCEPTION}))
        assert lms_aggregate(sub, LONG_TEXT) <= 0.7

    def test_clamped_at_zero(self):
        sub = JudgeSubScores(0.1, 0.1, 0.1, 0.1,
                             frozenset({CriticalFailure.EDIT_RATIONALE_CONTRADICTION,
                                        CriticalFailure.SEVERE_CHEMICAL_MISCONCEPTION}))
        assert lms_aggregate(sub, LONG_TEXT) == 0.0

    def test_subscore_bounds_validated(self):
        with pytest.raises(ValueError):
            JudgeSubScores(1.2, 0, 0, 0)


class TestRichness:
    def setup_method(self):
        self.config = RichnessConfig(prototypes=np.eye(4)[:2],
                                     peak_distance=0.5, bandwidth=0.2)

    def _at_distance(self, d):
        theta = math.acos(1.0 - d)
        return np.array([math.cos(theta), 0.0, math.sin(theta), 0.0])

    def test_peak_scores_one(self):
        assert richness_score(self._at_distance(0.5), self.config) == pytest.approx(1.0)

    def test_over_proximity_penalized(self):
        at_zero = richness_score(np.array([1.0, 0, 0, 0]), self.config)
        assert at_zero == pytest.approx(math.exp(-0.5 * (0.5 / 0.2) ** 2))
        assert at_zero < 1.0

    def test_gaussian_shape_at_one_bandwidth(self):
        value = richness_score(self._at_distance(0.7), self.config)
        assert value == pytest.approx(math.exp(-0.5), abs=1e-9)

    def test_unimodal_on_grid(self):
        distances = np.arange(0.0, 2.0, 1e-3)
        scores = np.exp(-0.5 * ((distances - self.config.peak_distance)
                                / self.config.bandwidth) ** 2)
        peak = int(np.argmax(scores))
        assert np.all(np.diff(scores[:peak + 1]) > 0)
        assert np.all(np.diff(scores[peak:]) < 0)
        assert abs(distances[peak] - self.config.peak_distance) <= 1e-3

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            richness_score(np.ones(3), self.config)

    def test_empty_prototypes(self):
        with pytest.raises(ValueError):
            RichnessConfig(prototypes=np.zeros((0, 4)),
                           peak_distance=0.5, bandwidth=0.2)


class TestFitRichness:
    def test_degenerate_single_prototype(self):
        X = np.tile([[0.6, 0.8]], (5, 1))
        config = fit_richness_config(X, 1)
        assert np.allclose(config.prototypes, [[0.6, 0.8]])
        assert config.bandwidth == 0.05

    def test_k_exceeding_distinct_vectors(self):
        X = np.tile([[1.0, 0.0]], (5, 1))
        with pytest.raises(ValueError):
            fit_richness_config(X, 2)

    def test_median_self_richness_on_gaussian_clusters(self):
        rng = np.random.default_rng(4)
        centers = rng.normal(size=(3, 16))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        for spread in (0.05, 0.15, 0.4):
            X = np.vstack([c + spread * rng.normal(size=(80, 16)) for c in centers])
            X /= np.linalg.norm(X, axis=1, keepdims=True)
            config = fit_richness_config(X, 3)
            scores = [richness_score(row, config) for row in X]
            assert 0.5 <= float(np.median(scores)) <= 1.0, spread

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(40, 8))
        a = fit_richness_config(X, 4)
        b = fit_richness_config(X, 4)
        assert np.array_equal(a.prototypes, b.prototypes)
        assert (a.peak_distance, a.bandwidth) == (b.peak_distance, b.bandwidth)


class TestJudges:
    def test_stub_deterministic(self):
        judge = StubJudgeClient()
        args = ("CC", "CCO", LONG_TEXT, {"DILI": -0.4})
        assert judge.evaluate(*args) == judge.evaluate(*args)

    def test_stub_contradiction_flag(self):
        judge = StubJudgeClient()
        sub = judge.evaluate("CC", "CCO", "the molecule is unchanged " + LONG_TEXT, {})
        assert CriticalFailure.EDIT_RATIONALE_CONTRADICTION in sub.critical_failures

    def test_make_judge_modes(self):
        assert isinstance(make_judge("stub"), StubJudgeClient)
        with pytest.raises(ConfigError):
            make_judge("remote")
        with pytest.raises(ConfigError):
            make_judge("nope")

    def test_remote_judge_parses_response(self):
        import httpx

        def handler(request):
            body = json.loads(request.content)
            assert body["model"] == "test-judge"
            content = json.dumps({"problem_solution": 0.9, "solution_edit": 0.8,
                                  "chain_completeness": 0.7, "causal_accuracy": 0.6,
                                  "critical_failures": ["contradiction"]})
            return httpx.Response(200, json={
                "choices": [{"message": {"content": content}}]})

        client = RemoteJudgeClient("http://judge.test/v1/chat", model="test-judge",
                                   transport=httpx.MockTransport(handler))
        sub = client.evaluate("CC", "CCO", LONG_TEXT, {"DILI": -0.1})
        assert sub.problem_solution_alignment == 0.9
        assert CriticalFailure.EDIT_RATIONALE_CONTRADICTION in sub.critical_failures
        client.close()

    def test_remote_judge_retries_then_raises(self):
        import httpx

        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(500)

        client = RemoteJudgeClient("http://judge.test/v1/chat",
                                   transport=httpx.MockTransport(handler))
        with pytest.raises(JudgeError):
            client.evaluate("CC", "CCO", LONG_TEXT, {})
        assert len(calls) == 2
        client.close()

    def test_remote_judge_recovers_on_retry(self):
        import httpx

        calls = []

        def handler(request):
            calls.append(1)
            if len(calls) == 1:
                return httpx.Response(200, json={"choices": [{"message": {"content": "garbled"}}]})
            content = json.dumps({"problem_solution": 1, "solution_edit": 1,
                                  "chain_completeness": 1, "causal_accuracy": 1})
            return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

        client = RemoteJudgeClient("http://judge.test/v1/chat",
                                   transport=httpx.MockTransport(handler))
        sub = client.evaluate("CC", "CCO", LONG_TEXT, {})
        assert sub.as_tuple() == (1.0, 1.0, 1.0, 1.0)
        assert len(calls) == 2
        client.close()
