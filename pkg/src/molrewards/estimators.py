"""Scikit-learn style estimators wrapping the core operations.

These follow the usual conventions (constructor stores parameters
verbatim, ``fit`` returns self, fitted state carries a trailing
underscore) so fingerprinting, richness scoring, and batch reweighting
compose with sklearn pipelines and parameter search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import fingerprints as fp
from . import pareto as pb
from ._validation import (
    check_embedding_matrix,
    check_objective_matrix,
    check_smiles_sequence,
)
from .reasoning import RichnessConfig, fit_richness_config, richness_score
from .smiles import MolecularGraph, parse_smiles


class EcfpFingerprinter(BaseEstimator, TransformerMixin):
    """Stateless transformer: SMILES strings (or graphs) to a bit matrix.

    Parameters
    ----------
    radius : int, circular neighborhood radius (2 = ECFP4).
    n_bits : int, folded width; must be a power of two.
    """

    def __init__(self, radius: int = fp.DEFAULT_RADIUS, n_bits: int = fp.DEFAULT_WIDTH):
        self.radius = radius
        self.n_bits = n_bits

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        if isinstance(X, str):
            raise TypeError("X must be a sequence of SMILES strings, not one string")
        items = list(X)
        if all(isinstance(x, MolecularGraph) for x in items):
            graphs = items
        else:
            graphs = [parse_smiles(s) for s in check_smiles_sequence(items)]
        out = np.zeros((len(graphs), self.n_bits), dtype=np.uint8)
        for row, graph in enumerate(graphs):
            bits = fp.ecfp(graph, self.radius, self.n_bits).bits
            while bits:
                low = bits & -bits
                out[row, low.bit_length() - 1] = 1
                bits ^= low
        return out

    def pairwise_tanimoto(self, X) -> np.ndarray:
        """Symmetric Tanimoto matrix over the inputs."""
        graphs = [parse_smiles(s) if isinstance(s, str) else s for s in X]
        prints = [fp.ecfp(g, self.radius, self.n_bits) for g in graphs]
        n = len(prints)
        out = np.ones((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = out[j, i] = fp.tanimoto(prints[i], prints[j])
        return out


class RichnessScorer(BaseEstimator, TransformerMixin):
    """Fits embedding prototypes, then scores distance-to-reference richness.

    ``fit`` learns ``prototypes_``, ``peak_distance_``, and ``bandwidth_``
    from validation embeddings; ``transform`` maps embeddings to [0, 1]
    richness scores.
    """

    def __init__(self, n_prototypes: int = 8, random_state: int = 0):
        self.n_prototypes = n_prototypes
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_embedding_matrix(X)
        config = fit_richness_config(X, self.n_prototypes, self.random_state)
        self.prototypes_ = config.prototypes
        self.peak_distance_ = config.peak_distance
        self.bandwidth_ = config.bandwidth
        self.config_ = config
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "config_"):
            raise NotFittedError("RichnessScorer is not fitted")
        X = check_embedding_matrix(X)
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        X = X / norms
        return np.array([richness_score(row, self.config_) for row in X])

    @classmethod
    def from_config(cls, config: RichnessConfig) -> "RichnessScorer":
        est = cls(n_prototypes=config.prototypes.shape[0])
        est.prototypes_ = config.prototypes
        est.peak_distance_ = config.peak_distance
        est.bandwidth_ = config.bandwidth
        est.config_ = config
        return est


class ParetoReweighter(BaseEstimator):
    """Learns batch weights from objective vectors, then reweights rewards.

    ``fit`` takes an (n, 6) objective matrix and computes ``pareto_mask_``,
    ``raw_weights_``, ``weights_``, ``channel_boosts_``, and
    ``group_scales_``; ``transform`` applies them to a (6, n) reward matrix.
    """

    def __init__(self, boost: float = 1.3, decay: float = 2.0,
                 shortfall_exponent: float = 0.5, boost_cap: float = 1.5,
                 scale_cap: float = 1.5, channel_targets=None):
        self.boost = boost
        self.decay = decay
        self.shortfall_exponent = shortfall_exponent
        self.boost_cap = boost_cap
        self.scale_cap = scale_cap
        self.channel_targets = channel_targets

    def _config(self) -> pb.BalanceConfig:
        targets = (tuple(self.channel_targets)
                   if self.channel_targets is not None else None)
        return pb.BalanceConfig(
            boost=self.boost, decay=self.decay,
            shortfall_exponent=self.shortfall_exponent,
            boost_cap=self.boost_cap, scale_cap=self.scale_cap,
            channel_targets=targets)

    def fit(self, X, y=None):
        X = check_objective_matrix(X, pb.N_CHANNELS)
        batch = pb.balance_batch(X, self._config())
        self.batch_ = batch
        self.pareto_mask_ = batch.pareto_mask
        self.raw_weights_ = batch.raw_weights
        self.weights_ = batch.weights
        self.channel_boosts_ = batch.channel_boosts
        self.group_scales_ = batch.group_scales
        return self

    def transform(self, rewards) -> np.ndarray:
        if not hasattr(self, "batch_"):
            raise NotFittedError("ParetoReweighter is not fitted")
        return pb.reweight_rewards(rewards, self.weights_,
                                   self.channel_boosts_, self.group_scales_)


class PairEvaluator(BaseEstimator):
    """Batch evaluator over pair records, sklearn-flavored facade.

    ``transform`` maps an iterable of PairRecord (or raw dict) entries to
    per-pair metric dictionaries using the same code path as the CLI.
    """

    def __init__(self, registry=None, lexicon=None, richness_config=None,
                 judge="stub", radius: int = fp.DEFAULT_RADIUS,
                 n_bits: int = fp.DEFAULT_WIDTH):
        self.registry = registry
        self.lexicon = lexicon
        self.richness_config = richness_config
        self.judge = judge
        self.radius = radius
        self.n_bits = n_bits

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> list[dict]:
        from .harness import EvaluationContext, PairRecord, evaluate_pair

        ctx = EvaluationContext.build(
            registry=self.registry, lexicon=self.lexicon,
            richness_config=self.richness_config, judge=self.judge,
            radius=self.radius, n_bits=self.n_bits)
        rows = []
        for item in X:
            record = item if isinstance(item, PairRecord) else PairRecord.from_dict(item)
            rows.append(evaluate_pair(record, ctx))
        return rows
