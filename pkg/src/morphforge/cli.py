"""Command-line interface for the dataset pipeline and evaluation suite."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import evaluation, formats, morph as me, pipeline
from .errors import MorphforgeError
from .providers import make_provider
from .raster import load_png, save_png


def _load(config_path: str | None) -> pipeline.PipelineConfig:
    if config_path is None:
        return pipeline.PipelineConfig()
    return pipeline.load_config(config_path)


@click.group()
def main():
    """morphforge: synthetic face-morphing dataset generation and evaluation."""


def _dataset_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="pipeline config (YAML)")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), required=True,
                      help="dataset root directory")(fn)
    return fn


@main.command("gen-base")
@_dataset_options
def gen_base(config_path, out_dir):
    """Run the base-sample acceptance loop."""
    config = _load(config_path)
    provider = make_provider(config.provider)
    try:
        manifest = pipeline.run_base_acceptance(config, provider, out_dir)
    except MorphforgeError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"accepted {len(manifest['subjects'])} subjects; "
               f"rejections: {manifest['rejections']}")


@main.command()
@_dataset_options
@click.option("--mode", type=click.Choice(["ifgs", "ifgd", "frpca", "all"]),
              default="all")
def mate(config_path, out_dir, mode):
    """Generate mated samples for accepted base subjects."""
    config = _load(config_path)
    provider = make_provider(config.provider)
    manifest = pipeline.load_manifest(Path(out_dir))
    modes = pipeline.MATED_MODES if mode == "all" else (mode,)
    try:
        manifest = pipeline.run_mated_generation(manifest, config, provider,
                                                 out_dir, modes=modes)
    except MorphforgeError as exc:
        raise click.ClickException(str(exc))
    total = sum(len(v) for modes_ in manifest["mated"].values() for v in modes_.values())
    click.echo(f"mated samples on record: {total}")


@main.command()
@_dataset_options
@click.option("--split", type=click.Choice(list(pipeline.SPLITS)), required=True)
@click.option("--k", type=int, default=None, help="top-k most similar peers per subject")
@click.option("--full", "full_", is_flag=True, help="all same-gender combinations")
def pair(config_path, out_dir, split, k, full_):
    """Select morph contributor pairs for a split."""
    if k is not None and full_:
        raise click.UsageError("--k and --full are mutually exclusive")
    config = _load(config_path)
    manifest = pipeline.load_manifest(Path(out_dir))
    mode = "full" if full_ else k
    pairs = pipeline.run_pairing(manifest, config, out_dir, split, k=mode)
    click.echo(f"{len(pairs)} pairs selected for split {split}")


@main.command()
@_dataset_options
@click.option("--alpha", type=float, default=None, help="morph blend factor")
def morph(config_path, out_dir, alpha):
    """Generate landmark morphs for all selected pairs."""
    config = _load(config_path)
    manifest = pipeline.load_manifest(Path(out_dir))
    manifest = pipeline.run_morph_generation(manifest, config, out_dir, alpha=alpha)
    click.echo(f"{len(manifest['morphs'])} morphs on record; "
               f"{len(manifest['morph_errors'])} errors")


@main.command()
@click.option("--suspect", type=click.Path(exists=True), required=True)
@click.option("--suspect-landmarks", type=click.Path(exists=True), required=True)
@click.option("--probe", type=click.Path(exists=True), required=True)
@click.option("--probe-landmarks", type=click.Path(exists=True), required=True)
@click.option("--factor", type=float, default=0.5, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def demorph(suspect, suspect_landmarks, probe, probe_landmarks, factor, out_path):
    """Invert a suspected morph against a trusted probe image."""
    result = me.demorph(load_png(suspect), formats.load_landmarks(suspect_landmarks),
                        load_png(probe), formats.load_landmarks(probe_landmarks),
                        factor)
    save_png(out_path, result)
    click.echo(f"wrote {out_path}")


@main.command()
@_dataset_options
def validate(config_path, out_dir):
    """Validate the dataset manifest; exit code 2 on violations."""
    config = _load(config_path)
    try:
        manifest = pipeline.load_manifest(Path(out_dir))
        violations = pipeline.validate_manifest(manifest, config, out_dir)
    except MorphforgeError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(violations, indent=2))
    if violations:
        sys.exit(2)


@main.group()
def eval():
    """Evaluation metrics over score files."""


@eval.command("map")
@click.option("--scores", type=click.Path(exists=True), required=True,
              help="CSV: morph_id,slot,attempt,frs_id,score")
@click.option("--thresholds", type=click.Path(exists=True), required=True,
              help="CSV: frs_id,threshold")
@click.option("--policy", type=click.Choice(["both", "either"]), default="both")
@click.option("--out", "out_path", type=click.Path(), required=True)
def eval_map(scores, thresholds, policy, out_path):
    """Morphing Attack Potential matrix."""
    rows = formats.read_attempt_scores(scores)
    attempts = [evaluation.AttemptScore(r["morph_id"], r["slot"], r["attempt"],
                                        r["frs_id"], r["score"]) for r in rows]
    thr = {}
    import csv

    with open(thresholds, newline="") as fh:
        for row in csv.DictReader(fh):
            thr[row["frs_id"]] = float(row["threshold"])
    matrix = evaluation.compute_map(attempts, thr, policy=policy)
    Path(out_path).write_text(matrix.to_csv())
    click.echo(f"wrote {out_path}")


@eval.command("det")
@click.option("--scores", type=click.Path(exists=True), required=True,
              help="CSV: id,label{bonafide|morph},score")
@click.option("--lower-is-bonafide", is_flag=True,
              help="flip polarity: lower scores are more bona-fide-like")
@click.option("--out", "out_path", type=click.Path(), required=True)
def eval_det(scores, lower_is_bonafide, out_path):
    """DET curve of MACER vs BPCER."""
    bona, attack = formats.read_detection_scores(scores)
    curve = evaluation.det_curve(bona, attack,
                                 higher_is_bonafide=not lower_is_bonafide)
    Path(out_path).write_text(curve.to_csv())
    click.echo(f"wrote {out_path}")


@eval.command("kld")
@click.option("--scores", type=click.Path(exists=True), required=True,
              help="CSV: id,subset,score")
@click.option("--p", "p_subset", required=True, help="reference subset tag")
@click.option("--q", "q_subset", required=True, help="comparison subset tag")
@click.option("--bins", type=int, default=100, show_default=True)
@click.option("--epsilon", type=float, default=1e-10, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def eval_kld(scores, p_subset, q_subset, bins, epsilon, out_path):
    """KL divergence between two quality-score distributions."""
    groups = formats.read_quality_scores(scores)
    for tag in (p_subset, q_subset):
        if tag not in groups:
            raise click.ClickException(f"subset {tag!r} not present in {scores}")
    value = evaluation.kl_divergence(groups[p_subset], groups[q_subset],
                                     bins=bins, epsilon=epsilon)
    Path(out_path).write_text(formats.format_csv(
        ["p", "q", "bins", "epsilon", "kl_divergence_nats"],
        [[p_subset, q_subset, bins, f"{epsilon:g}", f"{value:.10f}"]]))
    click.echo(f"KL({p_subset} || {q_subset}) = {value:.6f} nats")


@eval.command("kde")
@click.option("--scores", type=click.Path(exists=True), required=True,
              help="CSV: id,subset,score")
@click.option("--subset", required=True)
@click.option("--bandwidth", type=float, required=True)
@click.option("--grid", type=int, default=256, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def eval_kde(scores, subset, bandwidth, grid, out_path):
    """Kernel density estimate table for one subset's quality scores."""
    groups = formats.read_quality_scores(scores)
    if subset not in groups:
        raise click.ClickException(f"subset {subset!r} not present in {scores}")
    table = evaluation.kde_table(groups[subset], bandwidth, grid=grid)
    Path(out_path).write_text(evaluation.kde_csv(table))
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
