"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 I/O or file-format error,
3 numeric failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import fileio
from .embed import RescaleConfig, gmm_fit, pca_fit, pca_transform, rescale
from .experiments import (
    ConfigError,
    ExperimentConfig,
    check_reports,
    evaluate_once,
    generate_dataset,
    run_linkage_comparison,
    run_pipeline,
    run_recovery_sweep,
)
from .linkage import METHODS, cluster as run_cluster


def _load_config(ctx) -> ExperimentConfig:
    path = ctx.obj.get("config")
    payload = {}
    if path:
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    cfg = ExperimentConfig.from_dict(payload)
    if ctx.obj.get("seed") is not None:
        cfg.seed = ctx.obj["seed"]
    if ctx.obj.get("threads") is not None:
        cfg.threads = ctx.obj["threads"]
    return cfg


def _out_dir(ctx) -> Path:
    return fileio.ensure_dir(ctx.obj.get("out") or "out")


def _run(fn):
    try:
        fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except (fileio.FileFormatError, OSError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(2)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(3)


@click.group()
@click.option("--seed", type=int, default=None, help="Master seed (overrides config).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON experiment config.")
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--threads", type=int, default=None, help="Parallel trial workers.")
@click.pass_context
def main(ctx, seed, config_path, out, threads):
    """Hierarchical clustering benchmark toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, config=config_path, out=out, threads=threads)


@main.command()
@click.pass_context
def generate(ctx):
    """Sample the configured BTGM and write embedding + labels files."""
    def go():
        cfg = _load_config(ctx)
        out = _out_dir(ctx)
        from .core import derive_seed

        ds = generate_dataset(cfg, derive_seed(cfg.seed, 0))
        fileio.write_embedding(out / "data.emb1", ds.points, ds.flat_labels)
        fileio.write_labels(out / "labels.csv", ds.flat_labels, ds.level_labels)
        click.echo(f"wrote {ds.n} points in {ds.d} dims to {out}")
    _run(go)


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True), default=None)
@click.option("--mode", type=click.Choice(["pca", "rescale"]), required=True)
@click.option("--embed-dim", type=int, default=None, help="PCA target dimension.")
@click.option("--gmm-file", type=click.Path(exists=True), default=None)
@click.option("--gmm-k", type=int, default=None)
@click.option("--scale", "s", type=float, default=3.0)
@click.pass_context
def embed(ctx, input_path, labels_path, mode, embed_dim, gmm_file, gmm_k, s):
    """Transform an EMB1 file by PCA projection or mean rescaling."""
    def go():
        cfg = _load_config(ctx)
        out = _out_dir(ctx)
        points, emb_labels = fileio.read_embedding(input_path)
        if mode == "pca":
            target = embed_dim or cfg.h
            model = pca_fit(points, target)
            points_out = pca_transform(model, points)
        else:
            if gmm_file:
                gmm = fileio.read_gmm(gmm_file)
            else:
                if gmm_k is None:
                    raise ConfigError("rescale needs --gmm-file or --gmm-k")
                from .core import derive_seed

                gmm = gmm_fit(points, gmm_k, seed=derive_seed(cfg.seed, 1))
                fileio.write_gmm(out / "gmm.json", gmm)
            points_out = rescale(points, gmm, RescaleConfig(s))
        fileio.write_embedding(out / "embedded.emb1", points_out, emb_labels)
        click.echo(f"wrote {out / 'embedded.emb1'}")
    _run(go)


@main.command("cluster")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--method", type=click.Choice(list(METHODS)), default="ward")
@click.pass_context
def cluster_cmd(ctx, input_path, method):
    """Cluster an EMB1 file; writes the merge list as CSV."""
    def go():
        out = _out_dir(ctx)
        points, _ = fileio.read_embedding(input_path)
        tree = run_cluster(points, method)
        fileio.write_csv(
            out / "dendrogram.csv", ["left", "right", "height", "size"],
            [[int(l), int(r), repr(float(h)), int(s)] for l, r, h, s in
             zip(tree.lefts, tree.rights, tree.heights, tree.sizes)])
        click.echo(f"wrote {out / 'dendrogram.csv'}")
    _run(go)


@main.command("eval")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True), required=True)
@click.option("--method", type=click.Choice(list(METHODS)), default="ward")
@click.pass_context
def eval_cmd(ctx, input_path, labels_path, method):
    """Cluster an EMB1 file and report the metric set against labels."""
    def go():
        out = _out_dir(ctx)
        points, _ = fileio.read_embedding(input_path)
        flat, levels = fileio.read_labels(labels_path)
        if len(flat) != len(points):
            raise ConfigError("labels length does not match embedding")
        row = evaluate_once(points, flat, levels, method)
        fileio.write_json(out / "eval.json", row)
        click.echo(json.dumps(row, indent=2, sort_keys=True))
    _run(go)


@main.command()
@click.pass_context
def pipeline(ctx):
    """Run the full generate/ingest -> embed -> cluster -> evaluate loop."""
    def go():
        cfg = _load_config(ctx)
        result = run_pipeline(cfg, out_dir=_out_dir(ctx))
        click.echo(json.dumps(result["aggregate"], indent=2, sort_keys=True))
    _run(go)


@main.command()
@click.option("-n", "n_samples", type=int, default=None,
              help="Sample size assumed by the conditions (default: pool size).")
@click.pass_context
def check(ctx, n_samples):
    """Evaluate the recovery conditions for the configured BTGM."""
    def go():
        cfg = _load_config(ctx)
        reports = check_reports(cfg, n=n_samples)
        for name, report in reports.items():
            click.echo(f"== {name} ==")
            click.echo(str(report))
    _run(go)


@main.command()
@click.option("--separations", required=True,
              help="Comma-separated separation grid.")
@click.option("--trials", type=int, default=50)
@click.option("--family", type=click.Choice(["equidistant", "btgm"]),
              default="equidistant")
@click.pass_context
def sweep(ctx, separations, trials, family):
    """Recovery sweep over a separation grid; writes sweep.csv."""
    def go():
        cfg = _load_config(ctx)
        grid = [float(v) for v in separations.split(",") if v]
        rows = run_recovery_sweep(cfg, grid, trials, family=family,
                                  out_dir=_out_dir(ctx))
        for r in rows:
            click.echo(f"sep={r['separation']:g} dp={r['mean_dp']:.4f} "
                       f"recovery={r['recovery_rate']:.3f}")
    _run(go)


@main.command("compare-linkage")
@click.pass_context
def compare_linkage(ctx):
    """Evaluate all linkage methods on identical subsamples."""
    def go():
        cfg = _load_config(ctx)
        result = run_linkage_comparison(cfg, out_dir=_out_dir(ctx))
        for method, agg in result.items():
            click.echo(f"{method:9s} dp={agg['dp']['mean']:.4f}±{agg['dp']['std']:.4f} "
                       f"mw_ratio={agg['mw_ratio']['mean']:.4f}±{agg['mw_ratio']['std']:.4f}")
    _run(go)


if __name__ == "__main__":
    main()
