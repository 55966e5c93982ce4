"""Endpoint criteria registry and the overall optimization score.

The registry mirrors the 23-endpoint rule table: 3 range-target criteria,
15 threshold criteria (all "lower is better"), and 5 monotonic
"higher is better" criteria with no discrete bonus. The overall score
rewards direction-aware improvement on each shared endpoint, gates
non-liability endpoints at half weight, penalizes newly introduced
liabilities, and normalizes into [0, 1].

Normalization: score = clamp(raw / D, 0, 1) with a per-pair denominator
D = sum over original liabilities of (clip bound + that criterion's bonus),
and D = clip_bound / 2 when the original molecule has no liabilities, so
improvements on a liability-free molecule still register. Both anchors
hold exactly: an unchanged profile scores 0, and resolving every original
liability at saturated contribution with no new liabilities scores 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

EXPECTED_ENDPOINT_COUNT = 23

# Kinds and directions
RANGE = "range"
THRESHOLD = "threshold"
MONOTONIC = "monotonic"

LOWER_BETTER = "lower"
HIGHER_BETTER = "higher"
IN_RANGE_BETTER = "in-range"

_EPS = 1e-6


class ConfigError(ValueError):
    """Invalid registry or lexicon configuration."""


AdmetProfile = dict[str, float]


@dataclass(frozen=True)
class EndpointCriterion:
    endpoint: str
    kind: str
    direction: str
    threshold: float | None = None
    lo: float | None = None
    hi: float | None = None
    bonus: float = 0.0

    def __post_init__(self):
        if self.kind == RANGE:
            if self.lo is None or self.hi is None or self.lo >= self.hi:
                raise ConfigError(f"{self.endpoint}: range criterion needs lo < hi")
            if self.direction != IN_RANGE_BETTER:
                raise ConfigError(f"{self.endpoint}: range criterion must be in-range-better")
        elif self.kind == THRESHOLD:
            if self.threshold is None:
                raise ConfigError(f"{self.endpoint}: threshold criterion needs a threshold")
            if self.direction not in (LOWER_BETTER, HIGHER_BETTER):
                raise ConfigError(f"{self.endpoint}: bad threshold direction {self.direction!r}")
        elif self.kind == MONOTONIC:
            if self.direction not in (LOWER_BETTER, HIGHER_BETTER):
                raise ConfigError(f"{self.endpoint}: bad monotonic direction {self.direction!r}")
            if self.bonus != 0.0:
                raise ConfigError(f"{self.endpoint}: monotonic criteria carry no bonus")
        else:
            raise ConfigError(f"{self.endpoint}: unknown criterion kind {self.kind!r}")


@dataclass(frozen=True)
class CriteriaRegistry:
    criteria: dict[str, EndpointCriterion]
    clip_bound: float = 2.0
    new_liability_penalty: float = 0.3
    non_liability_weight: float = 0.5

    def __post_init__(self):
        if self.clip_bound <= 0:
            raise ConfigError("clip bound must be positive")
        if self.new_liability_penalty < 0:
            raise ConfigError("new-liability penalty must be non-negative")

    def __getitem__(self, endpoint: str) -> EndpointCriterion:
        try:
            return self.criteria[endpoint]
        except KeyError:
            raise KeyError(f"unknown endpoint id: {endpoint!r}") from None

    def __contains__(self, endpoint: str) -> bool:
        return endpoint in self.criteria

    def __len__(self) -> int:
        return len(self.criteria)

    def endpoints(self) -> list[str]:
        return list(self.criteria)

    def kind_counts(self) -> dict[str, int]:
        counts = {RANGE: 0, THRESHOLD: 0, MONOTONIC: 0}
        for c in self.criteria.values():
            counts[c.kind] += 1
        return counts


def _registry_from_dict(cfg: dict, source: str) -> CriteriaRegistry:
    try:
        range_bonus = float(cfg["range_bonus"])
        threshold_bonus = float(cfg["threshold_bonus"])
        criteria: dict[str, EndpointCriterion] = {}
        for name, spec in cfg["range_criteria"].items():
            criteria[name] = EndpointCriterion(
                endpoint=name, kind=RANGE, direction=IN_RANGE_BETTER,
                lo=float(spec["lo"]), hi=float(spec["hi"]), bonus=range_bonus)
        for name, spec in cfg["threshold_criteria"].items():
            criteria[name] = EndpointCriterion(
                endpoint=name, kind=THRESHOLD, direction=spec["direction"],
                threshold=float(spec["threshold"]), bonus=threshold_bonus)
        for name, spec in cfg["monotonic_criteria"].items():
            criteria[name] = EndpointCriterion(
                endpoint=name, kind=MONOTONIC, direction=spec["direction"])
        registry = CriteriaRegistry(
            criteria=criteria,
            clip_bound=float(cfg["clip_bound"]),
            new_liability_penalty=float(cfg["new_liability_penalty"]),
            non_liability_weight=float(cfg["non_liability_weight"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: malformed criteria config: {exc}") from exc
    if len(registry) != EXPECTED_ENDPOINT_COUNT:
        raise ConfigError(
            f"{source}: expected {EXPECTED_ENDPOINT_COUNT} endpoints, "
            f"found {len(registry)}")
    return registry


def load_registry(path: str) -> CriteriaRegistry:
    """Load a criteria registry from a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read criteria config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return _registry_from_dict(cfg, path)


def load_default_registry() -> CriteriaRegistry:
    """The packaged 23-endpoint default registry."""
    text = resources.files("molrewards.data").joinpath("admet_criteria.json").read_text()
    return _registry_from_dict(json.loads(text), "<default>")


def registry_to_dict(registry: CriteriaRegistry) -> dict:
    """Serializable view of a registry (used for config fingerprints)."""
    out = {
        "clip_bound": registry.clip_bound,
        "new_liability_penalty": registry.new_liability_penalty,
        "non_liability_weight": registry.non_liability_weight,
        "criteria": {},
    }
    for name, c in sorted(registry.criteria.items()):
        out["criteria"][name] = {
            "kind": c.kind, "direction": c.direction, "threshold": c.threshold,
            "lo": c.lo, "hi": c.hi, "bonus": c.bonus,
        }
    return out


# ---------------------------------------------------------------------------
# Liabilities and per-endpoint deltas
# ---------------------------------------------------------------------------

def _range_distance(value: float, lo: float, hi: float) -> float:
    return max(lo - value, 0.0, value - hi)


def is_liability(criterion: EndpointCriterion, value: float) -> bool:
    if criterion.kind == THRESHOLD:
        if criterion.direction == LOWER_BETTER:
            return value >= criterion.threshold
        return value <= criterion.threshold
    if criterion.kind == RANGE:
        return not (criterion.lo <= value <= criterion.hi)
    return False  # monotonic endpoints have no threshold to violate


def liabilities(profile: AdmetProfile, registry: CriteriaRegistry) -> set[str]:
    """Endpoint ids whose values sit on the undesirable side of their rule."""
    out = set()
    for endpoint, value in profile.items():
        if is_liability(registry[endpoint], value):
            out.add(endpoint)
    return out


def endpoint_delta(criterion: EndpointCriterion, original: float, optimized: float,
                   clip_bound: float = 2.0) -> tuple[float, float]:
    """Direction-aware improvement terms for one endpoint.

    Returns (continuous term clipped to [-clip_bound, clip_bound], bonus).
    The bonus fires on crossing a threshold to the desirable side or on
    entering a target range, and is added after clipping.
    """
    if criterion.kind == THRESHOLD:
        t = criterion.threshold
        if criterion.direction == LOWER_BETTER:
            continuous = (original - optimized) / max(abs(t), _EPS)
            crossed = original >= t and optimized < t
        else:
            continuous = (optimized - original) / max(abs(t), _EPS)
            crossed = original <= t and optimized > t
        bonus = criterion.bonus if crossed else 0.0
    elif criterion.kind == RANGE:
        lo, hi = criterion.lo, criterion.hi
        d_orig = _range_distance(original, lo, hi)
        d_opt = _range_distance(optimized, lo, hi)
        continuous = (d_orig - d_opt) / (hi - lo)
        bonus = criterion.bonus if d_orig > 0 and d_opt == 0 else 0.0
    else:  # monotonic
        if criterion.direction == HIGHER_BETTER:
            continuous = (optimized - original) / max(abs(original), _EPS)
        else:
            continuous = (original - optimized) / max(abs(original), _EPS)
        bonus = 0.0
    continuous = max(-clip_bound, min(clip_bound, continuous))
    return continuous, bonus


# ---------------------------------------------------------------------------
# Overall optimization score
# ---------------------------------------------------------------------------

@dataclass
class PairEvaluation:
    """Full scoring result for one (original, optimized) profile pair."""

    liabilities_original: set[str]
    liabilities_optimized: set[str]
    contributions: dict[str, float]
    raw: float
    score: float
    new_liability_count: int
    dropped_endpoints: int = 0
    components: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of bounds: {self.score}")


def overall_score(original: AdmetProfile, optimized: AdmetProfile,
                  registry: CriteriaRegistry) -> PairEvaluation:
    """Score an (original, optimized) endpoint-profile pair into [0, 1].

    Endpoints present in only one profile are dropped from the shared set
    and counted in ``dropped_endpoints``. Raises ValueError when the two
    profiles share no endpoints, and KeyError for ids absent from the
    registry.
    """
    shared = [e for e in original if e in optimized]
    dropped = (len(original) - len(shared)) + (len(optimized) - len(shared))
    if not shared:
        raise ValueError("profiles share no endpoints")
    for endpoint in set(original) | set(optimized):
        if endpoint not in registry:
            raise KeyError(f"unknown endpoint id: {endpoint!r}")

    liab_orig = liabilities(original, registry)
    liab_opt = liabilities(optimized, registry)
    new_liabilities = liab_opt - liab_orig

    contributions: dict[str, float] = {}
    components: dict[str, dict[str, float]] = {}
    total = 0.0
    for endpoint in shared:
        criterion = registry[endpoint]
        continuous, bonus = endpoint_delta(
            criterion, original[endpoint], optimized[endpoint], registry.clip_bound)
        gate = 1.0 if endpoint in liab_orig else registry.non_liability_weight
        contribution = gate * (continuous + bonus)
        contributions[endpoint] = contribution
        components[endpoint] = {"continuous": continuous, "bonus": bonus, "gate": gate}
        total += contribution
    raw = total - registry.new_liability_penalty * len(new_liabilities)

    denom = sum(registry.clip_bound + registry[e].bonus for e in liab_orig)
    if not liab_orig:
        denom = registry.clip_bound / 2.0
    score = min(1.0, max(0.0, raw / denom))

    return PairEvaluation(
        liabilities_original=liab_orig,
        liabilities_optimized=liab_opt,
        contributions=contributions,
        raw=raw,
        score=score,
        new_liability_count=len(new_liabilities),
        dropped_endpoints=dropped,
        components=components,
    )
