"""Batch engine: JSONL ingestion, per-pair evaluation, reports, statistics.

JSONL schema for pair records (one object per line):

    {"id": str,
     "original_smiles": str, "optimized_smiles": str,
     "original_admet": {endpoint: number}, "optimized_admet": {...},
     "reasoning": str?,                  # optional rationale text
     "reasoning_embedding": [number]?,   # optional unit vector
     "binding_energy_original": number?, # kcal/mol
     "binding_energy_optimized": number?,
     "category": "anti-inflammatory" | "antihypertensive" |
                 "antidiabetic" | "other"?}

Malformed lines never abort a run; they are collected into a rejects
report with their line numbers. Reports are deterministic: same inputs
and configs produce byte-identical output.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass

import numpy as np

from . import fingerprints as fp
from .criteria import (
    CriteriaRegistry,
    liabilities,
    load_default_registry,
    overall_score,
    registry_to_dict,
)
from .reasoning import (
    EndpointLexicon,
    RichnessConfig,
    extract_mentioned_liabilities,
    lms_aggregate,
    load_default_lexicon,
    make_judge,
    richness_score,
    target_property_f1,
)
from .smiles import (
    SmilesParseError,
    canonical_smiles,
    heavy_atom_count,
    parse_smiles,
    ring_count,
    rotatable_bond_count,
)

BINDING_GATE_KCAL = -6.0
CATEGORIES = ("anti-inflammatory", "antihypertensive", "antidiabetic", "other")


@dataclass
class PairRecord:
    id: str
    original_smiles: str
    optimized_smiles: str
    original_admet: dict[str, float]
    optimized_admet: dict[str, float]
    reasoning: str | None = None
    reasoning_embedding: list[float] | None = None
    binding_energy_original: float | None = None
    binding_energy_optimized: float | None = None
    category: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "PairRecord":
        if not isinstance(raw, dict):
            raise ValueError("record must be a JSON object")
        missing = [k for k in ("id", "original_smiles", "optimized_smiles",
                               "original_admet", "optimized_admet") if k not in raw]
        if missing:
            raise ValueError(f"missing fields: {', '.join(missing)}")
        for key in ("original_admet", "optimized_admet"):
            if not isinstance(raw[key], dict):
                raise ValueError(f"{key} must be an object")
        category = raw.get("category")
        if category is not None and category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        embedding = raw.get("reasoning_embedding")
        if embedding is not None:
            embedding = [float(v) for v in embedding]
        return cls(
            id=str(raw["id"]),
            original_smiles=str(raw["original_smiles"]),
            optimized_smiles=str(raw["optimized_smiles"]),
            original_admet={str(k): float(v) for k, v in raw["original_admet"].items()},
            optimized_admet={str(k): float(v) for k, v in raw["optimized_admet"].items()},
            reasoning=raw.get("reasoning"),
            reasoning_embedding=embedding,
            binding_energy_original=(None if raw.get("binding_energy_original") is None
                                     else float(raw["binding_energy_original"])),
            binding_energy_optimized=(None if raw.get("binding_energy_optimized") is None
                                      else float(raw["binding_energy_optimized"])),
            category=category,
        )


@dataclass
class Reject:
    line: int
    reason: str

    def to_dict(self) -> dict:
        return {"line": self.line, "reason": self.reason}


def ingest(path: str, registry: CriteriaRegistry | None = None
           ) -> tuple[list[PairRecord], list[Reject]]:
    """Read pair records from a JSONL file, collecting bad lines as rejects.

    A record is rejected when its JSON or required fields are malformed,
    when either SMILES fails to parse, or when its profiles name endpoints
    absent from the registry.
    """
    registry = registry or load_default_registry()
    records: list[PairRecord] = []
    rejects: list[Reject] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = PairRecord.from_dict(json.loads(line))
                parse_smiles(record.original_smiles)
                parse_smiles(record.optimized_smiles)
                for profile in (record.original_admet, record.optimized_admet):
                    unknown = [k for k in profile if k not in registry]
                    if unknown:
                        raise ValueError(f"unknown endpoints: {unknown}")
            except (json.JSONDecodeError, ValueError, SmilesParseError) as exc:
                rejects.append(Reject(line=line_no, reason=str(exc)))
                continue
            records.append(record)
    return records, rejects


# ---------------------------------------------------------------------------
# Per-pair evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvaluationContext:
    registry: CriteriaRegistry
    lexicon: EndpointLexicon
    richness_config: RichnessConfig | None
    judge: object
    radius: int = fp.DEFAULT_RADIUS
    n_bits: int = fp.DEFAULT_WIDTH
    balance_config: object | None = None

    @classmethod
    def build(cls, registry=None, lexicon=None, richness_config=None,
              judge="stub", radius: int = fp.DEFAULT_RADIUS,
              n_bits: int = fp.DEFAULT_WIDTH,
              balance_config=None) -> "EvaluationContext":
        registry = registry or load_default_registry()
        lexicon = lexicon or load_default_lexicon()
        lexicon.check_covers(registry)
        judge_client = make_judge(judge) if isinstance(judge, str) else judge
        return cls(registry=registry, lexicon=lexicon,
                   richness_config=richness_config, judge=judge_client,
                   radius=radius, n_bits=n_bits, balance_config=balance_config)

    def fingerprint_hash(self) -> str:
        """Deterministic digest of the active configuration."""
        from dataclasses import asdict

        from .pareto import BalanceConfig

        payload = {"registry": registry_to_dict(self.registry),
                   "lexicon": {k: list(v) for k, v in sorted(self.lexicon.aliases.items())},
                   "radius": self.radius, "n_bits": self.n_bits,
                   "richness": (self.richness_config.to_dict()
                                if self.richness_config else None),
                   "balance": asdict(self.balance_config or BalanceConfig())}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def evaluate_pair(record: PairRecord, ctx: EvaluationContext) -> dict:
    """All metrics for one pair; unavailable metrics come back as None."""
    row: dict = {"id": record.id}
    graph_o = parse_smiles(record.original_smiles)
    graph_p = parse_smiles(record.optimized_smiles)
    row["canonical_original"] = canonical_smiles(graph_o)
    row["canonical_optimized"] = canonical_smiles(graph_p)

    print_o = fp.ecfp(graph_o, ctx.radius, ctx.n_bits)
    print_p = fp.ecfp(graph_p, ctx.radius, ctx.n_bits)
    similarity = fp.tanimoto(print_o, print_p)
    row["similarity"] = similarity
    row["similarity_gate"] = fp.similarity_gate(similarity)
    # hex fingerprints kept in the record for audit
    row["fingerprint_original"] = print_o.to_hex()
    row["fingerprint_optimized"] = print_p.to_hex()

    if record.original_admet and record.optimized_admet:
        evaluation = overall_score(record.original_admet, record.optimized_admet,
                                   ctx.registry)
        row["overall_score"] = evaluation.score
        row["raw_aggregate"] = evaluation.raw
        row["liabilities_original"] = sorted(evaluation.liabilities_original)
        row["liabilities_optimized"] = sorted(evaluation.liabilities_optimized)
        row["new_liability_count"] = evaluation.new_liability_count
        true_liabilities = evaluation.liabilities_original
    else:
        row["overall_score"] = None
        row["raw_aggregate"] = None
        row["liabilities_original"] = sorted(liabilities(record.original_admet,
                                                         ctx.registry))
        row["liabilities_optimized"] = []
        row["new_liability_count"] = None
        true_liabilities = set(row["liabilities_original"])

    reasoning = record.reasoning or ""
    mentioned = extract_mentioned_liabilities(reasoning, ctx.lexicon)
    row["mentioned_liabilities"] = sorted(mentioned)
    row["target_f1"] = target_property_f1(mentioned, true_liabilities)

    deltas = {e: record.optimized_admet[e] - record.original_admet[e]
              for e in record.original_admet if e in record.optimized_admet}
    sub = ctx.judge.evaluate(record.original_smiles, record.optimized_smiles,
                             reasoning, deltas)
    row["lms"] = lms_aggregate(sub, reasoning)

    if record.reasoning_embedding is not None and ctx.richness_config is not None:
        emb = np.asarray(record.reasoning_embedding, dtype=float)
        norm = np.linalg.norm(emb)
        if norm > 0:
            emb = emb / norm
        row["richness"] = richness_score(emb, ctx.richness_config)
    else:
        row["richness"] = None

    row["binding_energy_optimized"] = record.binding_energy_optimized
    if record.binding_energy_optimized is not None:
        row["binding_gate"] = record.binding_energy_optimized <= BINDING_GATE_KCAL
    else:
        row["binding_gate"] = None
    return row


@dataclass
class EvaluationReport:
    rows: list[dict]
    failures: list[dict]
    aggregates: dict
    config_fingerprint: str

    def self_audit(self) -> None:
        """Recompute every aggregate from the rows; raises on mismatch."""
        recomputed = _aggregate(self.rows)
        for key, value in recomputed.items():
            have = self.aggregates[key]
            same = (value is None and have is None) or (
                value is not None and have is not None and abs(value - have) < 1e-12)
            if not same:
                raise AssertionError(f"aggregate {key} mismatch: {have} vs {value}")


def _mean_of(rows: list[dict], key: str) -> float | None:
    values = [r[key] for r in rows if r.get(key) is not None]
    if not values:
        return None
    return float(sum(values)) / len(values)


def _aggregate(rows: list[dict]) -> dict:
    gate_rows = [r for r in rows if r.get("binding_gate") is not None]
    sim_rows = [r for r in rows if r.get("similarity_gate") is not None]
    return {
        "pairs": len(rows),
        "mean_overall_score": _mean_of(rows, "overall_score"),
        "mean_target_f1": _mean_of(rows, "target_f1"),
        "mean_similarity": _mean_of(rows, "similarity"),
        "mean_lms": _mean_of(rows, "lms"),
        "mean_richness": _mean_of(rows, "richness"),
        "binding_gate_pass_ratio": (
            sum(1 for r in gate_rows if r["binding_gate"]) / len(gate_rows)
            if gate_rows else None),
        "similarity_gate_pass_ratio": (
            sum(1 for r in sim_rows if r["similarity_gate"]) / len(sim_rows)
            if sim_rows else None),
    }


def evaluate(records: list[PairRecord], ctx: EvaluationContext) -> EvaluationReport:
    """Evaluate every record; per-pair failures are recorded, never fatal."""
    rows: list[dict] = []
    failures: list[dict] = []
    for record in records:
        try:
            rows.append(evaluate_pair(record, ctx))
        except Exception as exc:
            failures.append({"id": record.id, "reason": str(exc)})
    report = EvaluationReport(rows=rows, failures=failures,
                              aggregates=_aggregate(rows),
                              config_fingerprint=ctx.fingerprint_hash())
    report.self_audit()
    return report


def write_report(report: EvaluationReport, path: str) -> None:
    """Rows as JSONL, then one aggregate record; deterministic bytes."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(json.dumps({"type": "pair", **row}, sort_keys=True) + "\n")
        fh.write(json.dumps({"type": "aggregate",
                             "config_fingerprint": report.config_fingerprint,
                             **report.aggregates}, sort_keys=True) + "\n")
        for failure in report.failures:
            fh.write(json.dumps({"type": "failure", **failure}, sort_keys=True) + "\n")


def format_report_table(report: EvaluationReport) -> str:
    """Aligned text summary of the aggregate metrics."""
    agg = report.aggregates
    lines = [
        "metric                        value",
        "----------------------------  ---------",
        f"pairs                         {agg['pairs']:>9d}",
    ]
    for key in ("mean_overall_score", "mean_target_f1", "mean_similarity",
                "mean_lms", "mean_richness", "binding_gate_pass_ratio",
                "similarity_gate_pass_ratio"):
        value = agg[key]
        text = "       --" if value is None else f"{value:>9.4f}"
        lines.append(f"{key:<28}  {text}")
    lines.append(f"config fingerprint            {report.config_fingerprint}")
    if report.failures:
        lines.append(f"failures                      {len(report.failures):>9d}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Dataset statistics
# ---------------------------------------------------------------------------

@dataclass
class DatasetStats:
    molecules: int
    mean_heavy_atoms: float
    mean_rings: float
    mean_rotatable_bonds: float
    unique_smiles: int
    unique_ratio: float
    mean_pairwise_tanimoto: float | None
    diversity_index: float | None
    sampled: int

    def to_dict(self) -> dict:
        return {
            "molecules": self.molecules,
            "mean_heavy_atoms": self.mean_heavy_atoms,
            "mean_rings": self.mean_rings,
            "mean_rotatable_bonds": self.mean_rotatable_bonds,
            "unique_smiles": self.unique_smiles,
            "unique_ratio": self.unique_ratio,
            "mean_pairwise_tanimoto": self.mean_pairwise_tanimoto,
            "diversity_index": self.diversity_index,
            "sampled": self.sampled,
        }


def stats(records: list[PairRecord], sample_size: int = 1000,
          seed: int = 0) -> DatasetStats:
    """Complexity and diversity statistics over all molecules in the records.

    Pairwise Tanimoto is computed over a seeded sample of at most
    ``sample_size`` molecules; the diversity index is one minus that mean.
    """
    smiles = [r.original_smiles for r in records] + [r.optimized_smiles for r in records]
    graphs = [parse_smiles(s) for s in smiles]
    canonicals = [canonical_smiles(g) for g in graphs]
    n = len(graphs)
    heavy = sum(heavy_atom_count(g) for g in graphs) / n
    rings = sum(ring_count(g) for g in graphs) / n
    rot = sum(rotatable_bond_count(g) for g in graphs) / n
    unique = len(set(canonicals))

    mean_sim = None
    sampled = 0
    if n >= 2:
        rng = random.Random(seed)
        idx = rng.sample(range(n), min(sample_size, n))
        prints = [fp.ecfp(graphs[i]) for i in idx]
        sampled = len(prints)
        total, count = 0.0, 0
        for i in range(len(prints)):
            for j in range(i + 1, len(prints)):
                total += fp.tanimoto(prints[i], prints[j])
                count += 1
        mean_sim = total / count if count else None

    return DatasetStats(
        molecules=n,
        mean_heavy_atoms=heavy,
        mean_rings=rings,
        mean_rotatable_bonds=rot,
        unique_smiles=unique,
        unique_ratio=unique / n,
        mean_pairwise_tanimoto=mean_sim,
        diversity_index=None if mean_sim is None else 1.0 - mean_sim,
        sampled=sampled,
    )
