"""Pareto-aware batch reweighting for multi-objective rollouts.

Each trajectory carries six objective channels, all oriented
higher-is-better: a reasoning group (target-property F1, judge soundness,
richness) and a molecule group (overall optimization score, fingerprint
similarity, binding utility = negated docking energy). Frontier members
get a fixed multiplicative boost; dominated trajectories decay with their
distance to the frontier in each of two 3-channel subspaces. Weights are
mean-normalized per batch so reweighting shifts emphasis without changing
the overall update magnitude. A second, batch-level layer scales lagging
groups and applies capped shortfall boosts to lagging channels.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

N_CHANNELS = 6
CHANNEL_NAMES = ("f1", "lms", "richness", "opt_score", "similarity", "binding_utility")
REASONING_CHANNELS = (0, 1, 2)
SMILES_CHANNELS = (3, 4, 5)
_EPS = 1e-6


@dataclass(frozen=True)
class ObjectiveVector:
    f1: float
    lms: float
    richness: float
    opt_score: float
    similarity: float
    binding_utility: float  # -energy (kcal/mol), higher is better

    def __post_init__(self):
        for name in ("f1", "lms", "richness", "opt_score", "similarity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.lms, self.richness,
                         self.opt_score, self.similarity, self.binding_utility])


@dataclass(frozen=True)
class BalanceConfig:
    boost: float = 1.3            # frontier boost factor
    decay: float = 2.0            # distance decay rate
    shortfall_exponent: float = 0.5
    boost_cap: float = 1.5
    scale_cap: float = 1.5
    channel_targets: tuple[float, ...] | None = None  # None: batch means (neutral)

    def __post_init__(self):
        if self.boost <= 1.0:
            raise ValueError("boost factor must exceed 1")
        if self.decay <= 0.0:
            raise ValueError("decay must be positive")
        if not 0.0 < self.shortfall_exponent <= 1.0:
            raise ValueError("shortfall exponent must be in (0, 1]")
        if self.boost_cap < 1.0 or self.scale_cap < 1.0:
            raise ValueError("caps must be at least 1")
        if self.channel_targets is not None and len(self.channel_targets) != N_CHANNELS:
            raise ValueError(f"need {N_CHANNELS} channel targets")


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        X = np.asarray(vectors, dtype=float)
    else:
        X = np.array([v.as_array() if isinstance(v, ObjectiveVector) else v
                      for v in vectors], dtype=float)
    if X.ndim != 2 or X.shape[1] != N_CHANNELS:
        raise ValueError(f"expected an (n, {N_CHANNELS}) objective matrix, got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    return X


def dominates(a, b) -> bool:
    """True when ``a`` is at least as good everywhere and better somewhere."""
    av = a.as_array() if isinstance(a, ObjectiveVector) else np.asarray(a, dtype=float)
    bv = b.as_array() if isinstance(b, ObjectiveVector) else np.asarray(b, dtype=float)
    return bool(np.all(av >= bv) and np.any(av > bv))


def pareto_set(vectors) -> set[int]:
    """Indices of non-dominated trajectories (the empirical Pareto front)."""
    X = _as_matrix(vectors)
    n = X.shape[0]
    # i is dominated when some j has X[j] >= X[i] everywhere and > somewhere
    ge = np.all(X[:, None, :] >= X[None, :, :], axis=2)
    gt = np.any(X[:, None, :] > X[None, :, :], axis=2)
    dominated = np.any(ge & gt, axis=0)
    return {i for i in range(n) if not dominated[i]}


def _subspace_coords(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reasoning and molecule subspace coordinates; binding utility is
    min-max rescaled per batch so the three molecule channels share scale."""
    reasoning = X[:, REASONING_CHANNELS]
    smiles = X[:, SMILES_CHANNELS].copy()
    binding = smiles[:, 2]
    lo, hi = binding.min(), binding.max()
    if hi > lo:
        smiles[:, 2] = (binding - lo) / (hi - lo)
    else:
        smiles[:, 2] = 0.5
    return reasoning, smiles


def sample_weights(vectors, config: BalanceConfig = BalanceConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Raw and mean-normalized per-trajectory weights.

    Frontier members receive exactly the boost factor. A dominated
    trajectory receives the product over both subspaces of
    1 + (boost - 1) * exp(-decay * distance-to-nearest-frontier-member).
    Normalization enforces mean(w) == 1.
    """
    X = _as_matrix(vectors)
    n = X.shape[0]
    front = pareto_set(X)
    raw = np.full(n, config.boost)
    dominated = [i for i in range(n) if i not in front]
    if dominated:
        anchor_idx = sorted(front)
        factors = np.ones(len(dominated))
        for coords in _subspace_coords(X):
            anchors = coords[anchor_idx]
            diffs = coords[dominated, None, :] - anchors[None, :, :]
            dist = np.sqrt((diffs ** 2).sum(axis=2)).min(axis=1)
            factors *= 1.0 + (config.boost - 1.0) * np.exp(-config.decay * dist)
        raw[dominated] = factors
    weights = n * raw / raw.sum()
    return raw, weights


def batch_adaptation(vectors, config: BalanceConfig = BalanceConfig(),
                     targets: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Group scales (2) and per-channel shortfall boosts (6) for one batch.

    A group's scale is target-mean over batch-mean, clamped to
    [1, scale cap]. A channel whose batch mean falls short of its target
    gets (target / mean) ** exponent, capped; channels at or above target
    stay at 1. With no targets configured, the batch means themselves are
    used and both layers stay neutral.
    """
    X = _as_matrix(vectors)
    means = X.mean(axis=0)
    if targets is None:
        targets = (np.asarray(config.channel_targets, dtype=float)
                   if config.channel_targets is not None else means.copy())
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (N_CHANNELS,):
        raise ValueError(f"targets must have shape ({N_CHANNELS},)")

    scales = np.ones(2)
    for g, channels in enumerate((REASONING_CHANNELS, SMILES_CHANNELS)):
        target_mean = targets[list(channels)].mean()
        batch_mean = means[list(channels)].mean()
        scales[g] = min(config.scale_cap,
                        max(1.0, target_mean / max(batch_mean, _EPS)))

    boosts = np.ones(N_CHANNELS)
    for m in range(N_CHANNELS):
        if means[m] < targets[m]:
            boosts[m] = min(config.boost_cap,
                            (targets[m] / max(means[m], _EPS)) ** config.shortfall_exponent)
    return scales, boosts


def reweight_rewards(rewards: np.ndarray, weights: np.ndarray,
                     boosts: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Apply sample weights, channel boosts, and group scales to a
    (channels, n) reward matrix: out[m][i] = r[m][i] * w[i] * b[m] * s[g(m)]."""
    R = np.asarray(rewards, dtype=float)
    w = np.asarray(weights, dtype=float)
    b = np.asarray(boosts, dtype=float)
    s = np.asarray(scales, dtype=float)
    if R.ndim != 2 or R.shape[0] != N_CHANNELS:
        raise ValueError(f"rewards must be ({N_CHANNELS}, n), got {R.shape}")
    if w.shape != (R.shape[1],):
        raise ValueError("weights length does not match batch size")
    if b.shape != (N_CHANNELS,) or s.shape != (2,):
        raise ValueError("boosts must have 6 entries and scales 2")
    group = np.array([s[0]] * 3 + [s[1]] * 3)
    return R * (b * group)[:, None] * w[None, :]


@dataclass
class TrajectoryBatch:
    """One rollout batch with its derived frontier, weights, and boosts."""

    vectors: np.ndarray
    pareto_mask: np.ndarray
    raw_weights: np.ndarray
    weights: np.ndarray
    group_scales: np.ndarray
    channel_boosts: np.ndarray
    config: BalanceConfig = field(default_factory=BalanceConfig)

    def __post_init__(self):
        n = self.vectors.shape[0]
        if abs(self.weights.mean() - 1.0) > 1e-9:
            raise ValueError("weights are not mean-normalized")
        if np.any(self.raw_weights <= 0):
            raise ValueError("raw weights must be positive")
        front = self.raw_weights[self.pareto_mask]
        if front.size and not np.all(front == self.config.boost):
            raise ValueError("frontier members must carry exactly the boost factor")
        if n != self.pareto_mask.shape[0]:
            raise ValueError("mask length mismatch")

    @property
    def frontier_ratio(self) -> float:
        return float(self.pareto_mask.mean())


def balance_batch(vectors, config: BalanceConfig = BalanceConfig(),
                  targets: np.ndarray | None = None) -> TrajectoryBatch:
    """Compute the full sample-level and batch-level balancing state."""
    X = _as_matrix(vectors)
    front = pareto_set(X)
    mask = np.zeros(X.shape[0], dtype=bool)
    mask[list(front)] = True
    raw, weights = sample_weights(X, config)
    scales, boosts = batch_adaptation(X, config, targets)
    return TrajectoryBatch(vectors=X, pareto_mask=mask, raw_weights=raw,
                           weights=weights, group_scales=scales,
                           channel_boosts=boosts, config=config)


class RunningMedianTargets:
    """Running per-channel median of observed batch means.

    Serves as the default target estimator when no fixed targets are
    configured; updates happen under a lock between batch computations.
    """

    def __init__(self):
        self._history: list[np.ndarray] = []
        self._lock = threading.Lock()

    def update(self, vectors) -> np.ndarray:
        X = _as_matrix(vectors)
        with self._lock:
            self._history.append(X.mean(axis=0))
            return np.median(np.stack(self._history), axis=0)

    def current(self) -> np.ndarray | None:
        with self._lock:
            if not self._history:
                return None
            return np.median(np.stack(self._history), axis=0)
