"""Synthetic rollout-batch simulator for the reweighting layer.

A generator spec assigns each objective channel a starting mean, a
per-step drift, and a standard deviation (an improving-Gaussian policy
proxy). Each step samples a batch, runs the Pareto reweighting, and logs
weight quantiles plus the frontier ratio, mirroring the shape of a
training-dynamics table. Binding is specified in energy terms (kcal/mol,
drifting downward as the policy improves) and negated into utility
internally.

Two knobs make the proxy behave like real rollouts instead of
independent noise: a shared per-trajectory quality factor correlates the
channels, and bounded channels are quantized (real diagnostic metrics
take few distinct values per batch), which produces the tie structure
that keeps the Pareto frontier a minority of the batch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import ConfigError
from .pareto import CHANNEL_NAMES, BalanceConfig, RunningMedianTargets, balance_batch

BOUNDED_CHANNELS = ("f1", "lms", "richness", "opt_score", "similarity")


@dataclass(frozen=True)
class ChannelSpec:
    start_mean: float
    drift: float
    std: float
    quantum: float = 0.0  # 0: continuous; else round to this grid


@dataclass
class GeneratorSpec:
    """Per-channel drifting-Gaussian sampler; binding is in kcal/mol."""

    channels: dict[str, ChannelSpec]
    batch_size: int = 32
    correlation: float = 0.0  # shared quality factor across channels

    def __post_init__(self):
        expected = set(BOUNDED_CHANNELS) | {"binding_energy"}
        if set(self.channels) != expected:
            raise ConfigError(
                f"generator spec must define channels {sorted(expected)}, "
                f"got {sorted(self.channels)}")
        if self.batch_size < 1:
            raise ConfigError("batch size must be at least 1")
        if not 0.0 <= self.correlation < 1.0:
            raise ConfigError("correlation must lie in [0, 1)")

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorSpec":
        try:
            channels = {name: ChannelSpec(start_mean=float(spec["start_mean"]),
                                          drift=float(spec["drift"]),
                                          std=float(spec["std"]),
                                          quantum=float(spec.get("quantum", 0.0)))
                        for name, spec in raw["channels"].items()}
            return cls(channels=channels, batch_size=int(raw.get("batch_size", 32)),
                       correlation=float(raw.get("correlation", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed generator spec: {exc}") from exc


def default_generator_spec(batch_size: int = 32) -> GeneratorSpec:
    """A mildly improving policy proxy with heterogeneous channel speeds.

    Correlation and quantization are calibrated so the logged weight
    quantiles and frontier ratio land near a realistic training run
    (median p50 just under 1, frontier a minority of the batch).
    """
    return GeneratorSpec(batch_size=batch_size, correlation=0.7, channels={
        "f1": ChannelSpec(0.20, 3e-4, 0.29, quantum=0.25),
        "lms": ChannelSpec(0.50, 2e-4, 0.19, quantum=0.25),
        "richness": ChannelSpec(0.60, 1e-4, 0.16, quantum=0.25),
        "opt_score": ChannelSpec(0.15, 2e-4, 0.16, quantum=0.25),
        "similarity": ChannelSpec(0.55, 1e-4, 0.19, quantum=0.25),
        "binding_energy": ChannelSpec(-6.5, -4e-4, 2.0),
    })


def load_generator_spec(path: str) -> GeneratorSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            return GeneratorSpec.from_dict(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read generator spec {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def _sample_batch(spec: GeneratorSpec, step: int, rng: np.random.Generator) -> np.ndarray:
    rho = spec.correlation
    quality = rng.normal(size=(spec.batch_size, 1))
    noise = rng.normal(size=(spec.batch_size, 6))
    z = rho * quality + math.sqrt(1.0 - rho * rho) * noise
    cols = []
    for k, name in enumerate(BOUNDED_CHANNELS):
        ch = spec.channels[name]
        values = np.clip(ch.start_mean + ch.drift * step + ch.std * z[:, k], 0.0, 1.0)
        if ch.quantum:
            values = np.round(values / ch.quantum) * ch.quantum
        cols.append(values)
    energy = spec.channels["binding_energy"]
    sampled = energy.start_mean + energy.drift * step + energy.std * z[:, 5]
    if energy.quantum:
        sampled = np.round(sampled / energy.quantum) * energy.quantum
    cols.append(-sampled)  # utility: higher is better
    return np.column_stack(cols)


@dataclass
class WeightDynamicsRow:
    step: int
    p50: float
    p90: float
    p99: float
    frontier_ratio: float
    channel_means: dict[str, float]

    def to_dict(self) -> dict:
        return {"step": self.step, "p50": self.p50, "p90": self.p90,
                "p99": self.p99, "frontier_ratio": self.frontier_ratio,
                "channel_means": self.channel_means}


@dataclass
class SimulationResult:
    rows: list[WeightDynamicsRow] = field(default_factory=list)

    def write_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.rows:
                fh.write(json.dumps(row.to_dict(), sort_keys=True) + "\n")

    def format_table(self) -> str:
        lines = ["  step     p50(w)   p90(w)   p99(w)   frontier"]
        for row in self.rows:
            lines.append(f"{row.step:>6d}   {row.p50:>8.3f} {row.p90:>8.3f} "
                         f"{row.p99:>8.3f}   {row.frontier_ratio:>8.3f}")
        return "\n".join(lines)


def simulate_rl_batches(spec: GeneratorSpec | None = None, steps: int = 1200,
                        seed: int = 0, config: BalanceConfig | None = None,
                        log_every: int = 1,
                        target_update_every: int = 100) -> SimulationResult:
    """Run the reweighting layer over a drifting synthetic policy.

    Targets follow a running median of batch channel means, refreshed
    every ``target_update_every`` batches. Every logged step records the
    weight quantiles and frontier ratio; mean(w) is 1 by construction and
    asserted per batch.
    """
    spec = spec or default_generator_spec()
    config = config or BalanceConfig()
    rng = np.random.default_rng(seed)
    estimator = RunningMedianTargets()
    targets = None
    result = SimulationResult()
    for step in range(steps):
        X = _sample_batch(spec, step, rng)
        if step % target_update_every == 0:
            targets = estimator.update(X)
        batch = balance_batch(X, config, targets)
        assert abs(batch.weights.mean() - 1.0) <= 1e-9
        if step % log_every == 0 or step == steps - 1:
            w = batch.weights
            p50, p90, p99 = np.percentile(w, [50, 90, 99])
            means = {name: float(X[:, k].mean())
                     for k, name in enumerate(CHANNEL_NAMES)}
            result.rows.append(WeightDynamicsRow(
                step=step, p50=float(p50), p90=float(p90), p99=float(p99),
                frontier_ratio=batch.frontier_ratio, channel_means=means))
    return result
