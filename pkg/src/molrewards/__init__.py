"""Reward and evaluation engine for ADMET-constrained molecular optimization.

Scores (original, optimized) molecule pairs against a 23-endpoint criteria
table, enforces structural and binding gates, evaluates optimization
rationales, and reweights RL rollout batches toward the empirical Pareto
front. Ships as a library, an sklearn-style estimator layer, and a CLI.
"""

from .smiles import (
    MolecularGraph,
    ParseDiagnostics,
    ParseErrorKind,
    SmilesParseError,
    canonical_smiles,
    heavy_atom_count,
    parse_smiles,
    ring_count,
    rotatable_bond_count,
)
from .fingerprints import Fingerprint, ecfp, similarity_gate, tanimoto
from .criteria import (
    AdmetProfile,
    CriteriaRegistry,
    EndpointCriterion,
    PairEvaluation,
    endpoint_delta,
    liabilities,
    load_default_registry,
    load_registry,
    overall_score,
)
from .reasoning import (
    EndpointLexicon,
    JudgeSubScores,
    RichnessConfig,
    extract_mentioned_liabilities,
    fit_richness_config,
    lms_aggregate,
    load_default_lexicon,
    richness_score,
    target_property_f1,
)
from .pareto import (
    BalanceConfig,
    ObjectiveVector,
    TrajectoryBatch,
    balance_batch,
    batch_adaptation,
    dominates,
    pareto_set,
    reweight_rewards,
    sample_weights,
)
from .estimators import (
    EcfpFingerprinter,
    PairEvaluator,
    ParetoReweighter,
    RichnessScorer,
)

__version__ = "0.1.0"

__all__ = [
    "AdmetProfile",
    "BalanceConfig",
    "CriteriaRegistry",
    "EcfpFingerprinter",
    "EndpointCriterion",
    "EndpointLexicon",
    "Fingerprint",
    "JudgeSubScores",
    "MolecularGraph",
    "ObjectiveVector",
    "PairEvaluation",
    "PairEvaluator",
    "ParetoReweighter",
    "ParseDiagnostics",
    "ParseErrorKind",
    "RichnessConfig",
    "RichnessScorer",
    "SmilesParseError",
    "TrajectoryBatch",
    "balance_batch",
    "batch_adaptation",
    "canonical_smiles",
    "dominates",
    "ecfp",
    "endpoint_delta",
    "extract_mentioned_liabilities",
    "fit_richness_config",
    "heavy_atom_count",
    "liabilities",
    "lms_aggregate",
    "load_default_lexicon",
    "load_default_registry",
    "load_registry",
    "overall_score",
    "pareto_set",
    "parse_smiles",
    "reweight_rewards",
    "richness_score",
    "ring_count",
    "rotatable_bond_count",
    "sample_weights",
    "similarity_gate",
    "tanimoto",
    "target_property_f1",
    "__version__",
]
