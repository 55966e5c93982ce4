"""Command-line interface.

Subcommands: ``score`` (one pair), ``evaluate`` (JSONL in, report out),
``reweight`` (objective JSONL in, weights out), ``simulate`` (synthetic
weight dynamics), ``stats`` (dataset statistics), and ``check-config``
(validate configs and exit). Exit code 0 on success, 2 on any fatal
configuration error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .criteria import ConfigError, load_default_registry, load_registry
from .harness import (
    EvaluationContext,
    PairRecord,
    evaluate as evaluate_records,
    evaluate_pair,
    format_report_table,
    ingest,
    stats as dataset_stats,
    write_report,
)
from .pareto import BalanceConfig, balance_batch
from .reasoning import load_default_lexicon, load_lexicon, load_richness_config
from .simulate import (
    default_generator_spec,
    load_generator_spec,
    simulate_rl_batches,
)
from .smiles import SmilesParseError


def _load_context(registry_path, lexicon_path, richness_path, judge) -> EvaluationContext:
    try:
        registry = load_registry(registry_path) if registry_path else load_default_registry()
        lexicon = load_lexicon(lexicon_path) if lexicon_path else load_default_lexicon()
        richness = load_richness_config(richness_path) if richness_path else None
        return EvaluationContext.build(registry=registry, lexicon=lexicon,
                                       richness_config=richness, judge=judge)
    except ConfigError as exc:
        raise click.UsageError(str(exc))


config_options = [
    click.option("--registry", "registry_path", type=click.Path(), default=None,
                 help="Criteria registry JSON (default: packaged 23-endpoint table)."),
    click.option("--lexicon", "lexicon_path", type=click.Path(), default=None,
                 help="Endpoint alias lexicon JSON (default: packaged)."),
    click.option("--richness-config", "richness_path", type=click.Path(), default=None,
                 help="Richness prototype config JSON (optional)."),
    click.option("--judge", type=click.Choice(["stub", "remote"]), default="stub",
                 show_default=True, help="Rationale judge mode."),
]


def with_config_options(fn):
    for option in reversed(config_options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="molrewards")
def main():
    """Reward and evaluation engine for molecular lead optimization."""


@main.command()
@with_config_options
@click.option("--original-smiles", default=None)
@click.option("--optimized-smiles", default=None)
@click.option("--original-admet", default=None, help="JSON endpoint map.")
@click.option("--optimized-admet", default=None, help="JSON endpoint map.")
@click.option("--reasoning", default=None)
@click.option("--binding-energy-optimized", type=float, default=None)
@click.option("--stdin", "from_stdin", is_flag=True,
              help="Read one full pair record as JSON from stdin.")
def score(registry_path, lexicon_path, richness_path, judge,
          original_smiles, optimized_smiles, original_admet, optimized_admet,
          reasoning, binding_energy_optimized, from_stdin):
    """Score one (original, optimized) pair and print a JSON metric map."""
    ctx = _load_context(registry_path, lexicon_path, richness_path, judge)
    if from_stdin:
        try:
            raw = json.load(sys.stdin)
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"stdin is not valid JSON: {exc}")
    else:
        if not original_smiles or not optimized_smiles:
            raise click.UsageError(
                "provide --original-smiles and --optimized-smiles, or --stdin")
        raw = {
            "id": "cli",
            "original_smiles": original_smiles,
            "optimized_smiles": optimized_smiles,
            "original_admet": json.loads(original_admet) if original_admet else {},
            "optimized_admet": json.loads(optimized_admet) if optimized_admet else {},
            "reasoning": reasoning,
            "binding_energy_optimized": binding_energy_optimized,
        }
    try:
        record = PairRecord.from_dict(raw)
        row = evaluate_pair(record, ctx)
    except (ValueError, KeyError, SmilesParseError) as exc:
        raise click.UsageError(f"cannot score pair: {exc}")
    click.echo(json.dumps(row, sort_keys=True))


@main.command()
@with_config_options
@click.argument("input_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Report JSONL path (default: INPUT with .report.jsonl).")
@click.option("--rejects-out", type=click.Path(), default=None,
              help="Rejects JSONL path (default: alongside the report).")
def evaluate(registry_path, lexicon_path, richness_path, judge,
             input_path, out_path, rejects_out):
    """Evaluate a JSONL dataset of pair records and write a report."""
    ctx = _load_context(registry_path, lexicon_path, richness_path, judge)
    records, rejects = ingest(input_path, ctx.registry)
    report = evaluate_records(records, ctx)
    out_path = out_path or input_path + ".report.jsonl"
    write_report(report, out_path)
    rejects_out = rejects_out or out_path + ".rejects.jsonl"
    with open(rejects_out, "w", encoding="utf-8") as fh:
        for reject in rejects:
            fh.write(json.dumps(reject.to_dict(), sort_keys=True) + "\n")
    click.echo(format_report_table(report))
    click.echo(f"report: {out_path} ({len(report.rows)} pairs, "
               f"{len(rejects)} rejects, {len(report.failures)} failures)")


@main.command()
@click.argument("input_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Weights JSONL path (default: stdout). '-' reads stdin.")
@click.option("--boost", type=float, default=1.3, show_default=True)
@click.option("--decay", type=float, default=2.0, show_default=True)
@click.option("--targets", default=None,
              help="JSON list of 6 channel targets (default: batch means).")
def reweight(input_path, out_path, boost, decay, targets):
    """Compute Pareto sample weights for an objective JSONL batch.

    Input rows: {"id": ..., "objectives": {"f1": x, "lms": x, "richness": x,
    "opt_score": x, "similarity": x, "binding_energy": x}}.
    """
    source = sys.stdin if input_path == "-" else open(input_path, encoding="utf-8")
    ids, vectors = [], []
    try:
        for line_no, line in enumerate(source, 1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                obj = raw["objectives"]
                vectors.append([float(obj["f1"]), float(obj["lms"]),
                                float(obj["richness"]), float(obj["opt_score"]),
                                float(obj["similarity"]),
                                -float(obj["binding_energy"])])
                ids.append(raw.get("id", line_no))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise click.UsageError(f"line {line_no}: bad objective record: {exc}")
    finally:
        if source is not sys.stdin:
            source.close()
    if not vectors:
        raise click.UsageError("no objective records in input")
    try:
        config = BalanceConfig(boost=boost, decay=decay)
        target_values = np.asarray(json.loads(targets), dtype=float) if targets else None
        batch = balance_batch(np.asarray(vectors), config, target_values)
    except (ValueError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc))

    lines = []
    for k, ident in enumerate(ids):
        lines.append(json.dumps({
            "type": "trajectory", "id": ident,
            "weight": batch.weights[k], "raw_weight": batch.raw_weights[k],
            "pareto": bool(batch.pareto_mask[k])}, sort_keys=True))
    lines.append(json.dumps({
        "type": "batch",
        "frontier_ratio": batch.frontier_ratio,
        "mean_weight": float(batch.weights.mean()),
        "group_scales": batch.group_scales.tolist(),
        "channel_boosts": batch.channel_boosts.tolist()}, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None,
              help="Generator spec JSON (default: built-in improving policy).")
@click.option("--steps", type=int, default=1200, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--log-every", type=int, default=100, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Dynamics JSONL path (default: print table only).")
def simulate(spec_path, steps, batch_size, seed, log_every, out_path):
    """Run the synthetic rollout simulator and emit weight dynamics."""
    try:
        spec = (load_generator_spec(spec_path) if spec_path
                else default_generator_spec(batch_size))
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    result = simulate_rl_batches(spec=spec, steps=steps, seed=seed,
                                 log_every=log_every)
    if out_path:
        result.write_jsonl(out_path)
    click.echo(result.format_table())


@main.command()
@with_config_options
@click.argument("input_path", type=click.Path(exists=True))
@click.option("--sample-size", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def stats(registry_path, lexicon_path, richness_path, judge,
          input_path, sample_size, seed, out_path):
    """Dataset complexity and diversity statistics for a pair JSONL file."""
    ctx = _load_context(registry_path, lexicon_path, richness_path, judge)
    records, rejects = ingest(input_path, ctx.registry)
    if not records:
        raise click.UsageError("no valid records in input")
    result = dataset_stats(records, sample_size=sample_size, seed=seed)
    payload = {**result.to_dict(), "rejects": len(rejects)}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command("check-config")
@with_config_options
def check_config(registry_path, lexicon_path, richness_path, judge):
    """Validate the configured registry and lexicon, then exit."""
    ctx = _load_context(registry_path, lexicon_path, richness_path, judge)
    click.echo(json.dumps({
        "endpoints": len(ctx.registry),
        "kinds": ctx.registry.kind_counts(),
        "config_fingerprint": ctx.fingerprint_hash(),
    }, sort_keys=True))


@main.command("fit-richness")
@click.argument("embeddings_path", type=click.Path(exists=True))
@click.option("--prototypes", "n_prototypes", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Where to write the fitted richness config JSON.")
def fit_richness(embeddings_path, n_prototypes, seed, out_path):
    """Fit richness prototypes from a validation-embedding JSONL file.

    Input rows: {"id": ..., "vector": [..]}.
    """
    from .reasoning import (
        fit_richness_config,
        load_embeddings_jsonl,
        save_richness_config,
    )

    try:
        embeddings = load_embeddings_jsonl(embeddings_path)
        config = fit_richness_config(np.stack(list(embeddings.values())),
                                     n_prototypes, random_state=seed)
    except (ConfigError, ValueError) as exc:
        raise click.UsageError(str(exc))
    save_richness_config(config, out_path)
    click.echo(json.dumps({
        "embeddings": len(embeddings),
        "prototypes": n_prototypes,
        "peak_distance": config.peak_distance,
        "bandwidth": config.bandwidth,
        "out": out_path,
    }, sort_keys=True))


if __name__ == "__main__":
    main()
