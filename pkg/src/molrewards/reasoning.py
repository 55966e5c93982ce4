"""Rationale-quality metrics: target-property F1, judge-score aggregation,
and embedding-based richness.

The judge interface has two modes: a deterministic keyword stub for
offline use (the default everywhere, so the full test suite runs without
network access) and a remote HTTP JSON client for a real judge model.
Embeddings are always supplied by the caller; this module never embeds
text itself.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from .criteria import ConfigError, CriteriaRegistry

MIN_REASONING_TOKENS = 10
CRITICAL_FAILURE_PENALTY = 0.3


# ---------------------------------------------------------------------------
# Endpoint lexicon and mention extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndpointLexicon:
    """Surface-form aliases for endpoint ids, lowercase-normalized."""

    aliases: dict[str, tuple[str, ...]]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for endpoint, forms in self.aliases.items():
            if not forms:
                raise ConfigError(f"endpoint {endpoint!r} has no aliases")
            for form in forms:
                if form != form.lower():
                    raise ConfigError(f"alias {form!r} is not lowercase")
                if form in seen and seen[form] != endpoint:
                    raise ConfigError(
                        f"alias {form!r} maps to both {seen[form]!r} and {endpoint!r}")
                seen[form] = endpoint

    def endpoints(self) -> list[str]:
        return list(self.aliases)

    def check_covers(self, registry: CriteriaRegistry) -> None:
        missing = [e for e in registry.endpoints() if e not in self.aliases]
        if missing:
            raise ConfigError(f"lexicon missing aliases for endpoints: {missing}")


def _lexicon_from_dict(raw: dict, source: str) -> EndpointLexicon:
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(f"{source}: lexicon must be a non-empty object")
    try:
        aliases = {str(k): tuple(str(a) for a in v) for k, v in raw.items()}
    except TypeError as exc:
        raise ConfigError(f"{source}: malformed lexicon: {exc}") from exc
    return EndpointLexicon(aliases=aliases)


def load_lexicon(path: str) -> EndpointLexicon:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read lexicon {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return _lexicon_from_dict(raw, path)


def load_default_lexicon() -> EndpointLexicon:
    text = resources.files("molrewards.data").joinpath("endpoint_lexicon.json").read_text()
    return _lexicon_from_dict(json.loads(text), "<default>")


def extract_mentioned_liabilities(reasoning: str, lexicon: EndpointLexicon) -> set[str]:
    """Endpoints whose aliases appear in the text, longest match first.

    Matching is case-insensitive with alphanumeric boundaries; a span
    claimed by a longer alias is masked so its substrings cannot trigger a
    second endpoint.
    """
    if not reasoning:
        return set()
    text = reasoning.lower()
    masked = bytearray(len(text))
    found: set[str] = set()
    forms = sorted(
        ((form, endpoint) for endpoint, fs in lexicon.aliases.items() for form in fs),
        key=lambda t: (-len(t[0]), t[0]))
    for form, endpoint in forms:
        pattern = r"(?<![a-z0-9])" + re.escape(form) + r"(?![a-z0-9])"
        for match in re.finditer(pattern, text):
            if any(masked[match.start():match.end()]):
                continue
            for k in range(match.start(), match.end()):
                masked[k] = 1
            found.add(endpoint)
    return found


def target_property_f1(mentioned: set[str], true_liabilities: set[str]) -> float:
    """F1 between liabilities named in a rationale and the true set.

    Conventions: both sets empty is perfect agreement (1.0); exactly one
    empty is complete disagreement (0.0).
    """
    if not mentioned and not true_liabilities:
        return 1.0
    if not mentioned or not true_liabilities:
        return 0.0
    hits = len(mentioned & true_liabilities)
    if hits == 0:
        return 0.0
    precision = hits / len(mentioned)
    recall = hits / len(true_liabilities)
    return 2 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# Judge sub-scores and aggregation
# ---------------------------------------------------------------------------

class CriticalFailure(Enum):
    EDIT_RATIONALE_CONTRADICTION = "edit-rationale contradiction"
    SEVERE_CHEMICAL_MISCONCEPTION = "severe chemical misconception"


@dataclass(frozen=True)
class JudgeSubScores:
    problem_solution_alignment: float
    solution_edit_alignment: float
    chain_completeness: float
    causal_accuracy: float
    critical_failures: frozenset[CriticalFailure] = frozenset()

    def __post_init__(self):
        for name in ("problem_solution_alignment", "solution_edit_alignment",
                     "chain_completeness", "causal_accuracy"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.problem_solution_alignment, self.solution_edit_alignment,
                self.chain_completeness, self.causal_accuracy)


def lms_aggregate(sub: JudgeSubScores, reasoning: str) -> float:
    """Aggregate judge sub-scores into a bounded [0, 1] soundness score.

    Equal-weight mean of the four sub-scores, minus 0.3 per critical
    failure, clamped. Empty, whitespace-only, or sub-10-token rationales
    score zero regardless of sub-scores.
    """
    if not reasoning or not reasoning.strip():
        return 0.0
    if len(reasoning.split()) < MIN_REASONING_TOKENS:
        return 0.0
    base = sum(sub.as_tuple()) / 4.0
    base -= CRITICAL_FAILURE_PENALTY * len(sub.critical_failures)
    return min(1.0, max(0.0, base))


# ---------------------------------------------------------------------------
# Richness: unimodal embedding-distance score
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RichnessConfig:
    """Prototype reference space plus the unimodal mapping parameters."""

    prototypes: np.ndarray  # (k, d), unit rows
    peak_distance: float
    bandwidth: float

    def __post_init__(self):
        protos = np.asarray(self.prototypes, dtype=float)
        if protos.ndim != 2 or protos.shape[0] == 0:
            raise ValueError("prototypes must be a non-empty (k, d) array")
        norms = np.linalg.norm(protos, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise ValueError("prototypes must be unit-normalized")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 < self.peak_distance < 2.0:
            raise ValueError("peak distance must lie in (0, 2) for cosine distance")

    def to_dict(self) -> dict:
        return {"prototypes": self.prototypes.tolist(),
                "peak_distance": self.peak_distance,
                "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, raw: dict) -> "RichnessConfig":
        return cls(prototypes=np.asarray(raw["prototypes"], dtype=float),
                   peak_distance=float(raw["peak_distance"]),
                   bandwidth=float(raw["bandwidth"]))


def richness_score(embedding: np.ndarray, config: RichnessConfig) -> float:
    """Unimodal [0, 1] score of distance to the nearest prototype.

    Peaks at the configured distance; both over-proximity (mimicry) and
    excessive drift score lower.
    """
    emb = np.asarray(embedding, dtype=float)
    if emb.ndim != 1:
        raise ValueError("embedding must be a 1-D vector")
    if emb.shape[0] != config.prototypes.shape[1]:
        raise ValueError(
            f"embedding dimension {emb.shape[0]} does not match prototypes "
            f"({config.prototypes.shape[1]})")
    d = float(np.min(1.0 - config.prototypes @ emb))
    z = (d - config.peak_distance) / config.bandwidth
    return float(np.exp(-0.5 * z * z))


_PEAK_SCALE = 1.25
_BANDWIDTH_FLOOR = 0.05
_PEAK_FLOOR = 0.05


def fit_richness_config(validation_embeddings: np.ndarray, k: int,
                        random_state: int = 0) -> RichnessConfig:
    """Fit prototypes and mapping parameters from validation rationales.

    K-means (k-means++, fixed seed) on unit-normalized embeddings yields
    the prototypes. The peak distance is 1.25 times the median of the
    embeddings' minimum cosine distances to those prototypes, and the
    bandwidth is the interquartile range of the same distances; both are
    floored at 0.05 to stay well-defined on degenerate inputs.
    """
    from sklearn.cluster import KMeans

    X = np.asarray(validation_embeddings, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("validation embeddings must be a non-empty (n, d) array")
    if k < 1:
        raise ValueError("k must be at least 1")
    if X.shape[0] < k:
        raise ValueError(f"need at least k={k} embeddings, got {X.shape[0]}")
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero-norm embedding in validation set")
    X = X / norms
    distinct = np.unique(np.round(X, 12), axis=0).shape[0]
    if distinct < k:
        raise ValueError(
            f"k={k} exceeds the {distinct} distinct validation embeddings")

    km = KMeans(n_clusters=k, init="k-means++", n_init=10,
                random_state=random_state).fit(X)
    protos = km.cluster_centers_
    proto_norms = np.linalg.norm(protos, axis=1, keepdims=True)
    proto_norms[proto_norms == 0] = 1.0
    protos = protos / proto_norms

    dists = np.min(1.0 - X @ protos.T, axis=1)
    dists = np.maximum(dists, 0.0)
    peak = max(_PEAK_SCALE * float(np.median(dists)), _PEAK_FLOOR)
    q75, q25 = np.percentile(dists, [75, 25])
    bandwidth = max(float(q75 - q25), _BANDWIDTH_FLOOR)
    return RichnessConfig(prototypes=protos, peak_distance=peak, bandwidth=bandwidth)


def load_richness_config(path: str) -> RichnessConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return RichnessConfig.from_dict(raw)
    except OSError as exc:
        raise ConfigError(f"cannot read richness config {path!r}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed richness config: {exc}") from exc


def save_richness_config(config: RichnessConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_embeddings_jsonl(path: str) -> dict[str, np.ndarray]:
    """Embedding vectors keyed by id from a JSONL file of {id, vector}."""
    out: dict[str, np.ndarray] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    out[str(raw["id"])] = np.asarray(raw["vector"], dtype=float)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}:{line_no}: bad embedding record: {exc}")
    except OSError as exc:
        raise ConfigError(f"cannot read embeddings {path!r}: {exc}") from exc
    if not out:
        raise ConfigError(f"{path}: no embedding records")
    lengths = {v.shape for v in out.values()}
    if len(lengths) > 1:
        raise ConfigError(f"{path}: inconsistent embedding dimensions {lengths}")
    return out


# ---------------------------------------------------------------------------
# Judge clients
# ---------------------------------------------------------------------------

_PROBLEM_WORDS = ("high", "poor", "low", "risk", "liability", "liabilities",
                  "exceeds", "violates", "problematic", "unfavorable")
_SOLUTION_WORDS = ("replace", "replacing", "add", "adding", "remove", "removing",
                   "introduce", "introducing", "substitute", "substituting",
                   "reduce", "reducing", "modify", "modifying", "swap")
_CHAIN_WORDS = ("because", "therefore", "thus", "so that", "leading to",
                "which improves", "resulting in", "in turn")
_CAUSAL_WORDS = ("improve", "improves", "improving", "decrease", "decreases",
                 "increase", "increases", "lower", "lowers", "enhances",
                 "mitigates", "reduces")


def _keyword_score(text: str, words: tuple[str, ...]) -> float:
    hits = sum(1 for w in words if w in text)
    return min(1.0, 0.4 + 0.2 * hits)


class StubJudgeClient:
    """Deterministic keyword-based judge for offline runs and tests.

    Scores depend only on the inputs. Critical-failure flags fire on
    explicit marker phrases: a claim of an unchanged molecule while the
    SMILES differ flags an edit-rationale contradiction, and the phrase
    "violates valence" flags a severe chemical misconception.
    """

    def evaluate(self, original_smiles: str, optimized_smiles: str,
                 reasoning: str, property_deltas: dict[str, float] | None = None) -> JudgeSubScores:
        text = (reasoning or "").lower()
        if not text.strip():
            return JudgeSubScores(0.0, 0.0, 0.0, 0.0)
        deltas = property_deltas or {}
        mentions_change = any(abs(v) > 0 for v in deltas.values())
        flags = set()
        if ("unchanged" in text or "no change" in text) and original_smiles != optimized_smiles:
            flags.add(CriticalFailure.EDIT_RATIONALE_CONTRADICTION)
        if "violates valence" in text:
            flags.add(CriticalFailure.SEVERE_CHEMICAL_MISCONCEPTION)
        return JudgeSubScores(
            problem_solution_alignment=_keyword_score(text, _PROBLEM_WORDS),
            solution_edit_alignment=_keyword_score(text, _SOLUTION_WORDS),
            chain_completeness=_keyword_score(text, _CHAIN_WORDS),
            causal_accuracy=min(1.0, _keyword_score(text, _CAUSAL_WORDS)
                                + (0.1 if mentions_change else 0.0)),
            critical_failures=frozenset(flags),
        )


_JUDGE_PROMPT = """You are reviewing the logical coherence of a molecular \
optimization rationale. Score four aspects from 0 to 1:
1) alignment between the problems identified and the proposed solution
2) alignment between the proposed solution and the actual SMILES edits
3) completeness of the problem -> strategy -> modification -> effect chain
4) accuracy of the causal claims

Also report critical failures: "contradiction" when the described edits \
contradict the SMILES changes, "misconception" for a severe chemical error.

Original SMILES: {original}
Optimized SMILES: {optimized}
Property changes: {deltas}
Rationale:
{reasoning}

Reply with JSON only: {{"problem_solution": x, "solution_edit": x, \
"chain_completeness": x, "causal_accuracy": x, "critical_failures": []}}"""

_FLAG_NAMES = {
    "contradiction": CriticalFailure.EDIT_RATIONALE_CONTRADICTION,
    "misconception": CriticalFailure.SEVERE_CHEMICAL_MISCONCEPTION,
}


class JudgeError(RuntimeError):
    """Remote judge transport failure or unusable response."""


class RemoteJudgeClient:
    """HTTP JSON client for an external judge model.

    Sends an OpenAI-style chat completion request and parses the four
    sub-scores plus flags from the reply. Failed or malformed calls are
    retried once, then surfaced as JudgeError. Calls are serialized with an
    internal lock so concurrent evaluations cannot interleave responses.
    """

    def __init__(self, endpoint: str, model: str = "gpt-4o-mini",
                 api_key: str | None = None, timeout: float = 30.0,
                 transport=None):
        import httpx

        self.endpoint = endpoint
        self.model = model
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(headers=headers, timeout=timeout,
                                    transport=transport)
        self._lock = threading.Lock()

    def close(self):
        self._client.close()

    def evaluate(self, original_smiles: str, optimized_smiles: str,
                 reasoning: str, property_deltas: dict[str, float] | None = None) -> JudgeSubScores:
        prompt = _JUDGE_PROMPT.format(
            original=original_smiles, optimized=optimized_smiles,
            deltas=json.dumps(property_deltas or {}, sort_keys=True),
            reasoning=reasoning)
        payload = {"model": self.model,
                   "messages": [{"role": "user", "content": prompt}],
                   "temperature": 0}
        last_error: Exception | None = None
        with self._lock:
            for _ in range(2):
                try:
                    response = self._client.post(self.endpoint, json=payload)
                    response.raise_for_status()
                    return self._parse(response.json())
                except Exception as exc:  # retried once, then surfaced
                    last_error = exc
        raise JudgeError(f"judge call failed after retry: {last_error}") from last_error

    @staticmethod
    def _parse(body: dict) -> JudgeSubScores:
        content = body["choices"][0]["message"]["content"]
        start, end = content.find("{"), content.rfind("}")
        if start == -1 or end == -1:
            raise ValueError("no JSON object in judge reply")
        scores = json.loads(content[start:end + 1])
        flags = frozenset(_FLAG_NAMES[f] for f in scores.get("critical_failures", [])
                          if f in _FLAG_NAMES)
        return JudgeSubScores(
            problem_solution_alignment=float(scores["problem_solution"]),
            solution_edit_alignment=float(scores["solution_edit"]),
            chain_completeness=float(scores["chain_completeness"]),
            causal_accuracy=float(scores["causal_accuracy"]),
            critical_failures=flags,
        )


def make_judge(mode: str = "stub", **kwargs):
    """Judge factory: ``stub`` (default, offline) or ``remote``."""
    if mode == "stub":
        return StubJudgeClient()
    if mode == "remote":
        if "endpoint" not in kwargs:
            raise ConfigError("remote judge requires an endpoint URL")
        return RemoteJudgeClient(**kwargs)
    raise ConfigError(f"unknown judge mode {mode!r}")
