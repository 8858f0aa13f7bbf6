"""Experiment protocols: the embed-cluster-evaluate pipeline, recovery
sweeps, linkage comparisons, and separation-condition reports.

All protocols are deterministic functions of (config, seed): repeat r
draws its subsample from an independent counter-based stream derived from
the master seed, and result files contain no timestamps, so reruns are
byte-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import btgm as _btgm
from . import fileio
from .btgm import BtgmSpec, MixtureSpec, SeparationReport, btgm_mixture, sample
from .core import Dataset, counter_rng, cut, derive_seed
from .embed import RescaleConfig, gmm_fit, pca_fit, pca_transform, rescale
from .linkage import METHODS, cluster
from .metrics import (
    dendrogram_purity,
    level_weight_totals,
    moseley_wang_leveled,
    mw_opt,
)

EMBEDDINGS = ("none", "pca", "external", "external+rescale")
MW_WEIGHTS = ("flat", "summed", "deepest")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass
class ExperimentConfig:
    """Fully serializable description of one experiment.

    A config plus its seed reproduces every output file bitwise.
    """

    # generator (used unless an external embedding is ingested)
    h: int = 3
    margin: float = 8.0
    alpha: float = 2.0
    dim: int = 100
    per_cluster: int = 250
    shift_count: int | None = None      # None -> k/2
    shift_rotation: int | None = None   # None -> d/2
    # embedding
    embedding: str = "none"
    embed_dim: int | None = None        # None -> h
    rescale_s: float = 3.0
    gmm_components: int | None = None   # None -> number of classes
    gmm_file: str | None = None         # external GMM params, used verbatim
    external_embedding: str | None = None
    external_labels: str | None = None
    # clustering / evaluation
    method: str = "ward"
    mw_weights: str = "flat"            # leaf-cluster similarities; see evaluate_once
    eval_n: int | None = 1000           # None -> whole pool
    repeats: int = 10
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.embedding not in EMBEDDINGS:
            raise ConfigError(f"embedding must be one of {EMBEDDINGS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.embedding.startswith("external") and not self.external_embedding:
            raise ConfigError("external embedding selected but no file given")
        if self.repeats < 1 or self.per_cluster < 1:
            raise ConfigError("repeats and per_cluster must be >= 1")
        if self.eval_n is not None and self.eval_n < 2:
            raise ConfigError("eval_n must be >= 2")
        if self.mw_weights not in MW_WEIGHTS:
            raise ConfigError(f"mw_weights must be one of {MW_WEIGHTS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(payload: dict) -> "ExperimentConfig":
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        extra = set(payload) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        cfg = ExperimentConfig(**payload)
        cfg.validate()
        return cfg

    @property
    def spec(self) -> BtgmSpec:
        return benchmark_spec(self.h, self.margin, self.alpha, self.dim)


def benchmark_spec(h: int, margin: float, alpha: float, dim: int) -> BtgmSpec:
    """Mixture for the benchmark's margin convention.

    The benchmark margin counts twice the closest inter-mean distance:
    sibling leaves sit margin/2 apart.  The mean construction doubles its
    base scale at the lowest level, so the base scale here is margin/4.
    """
    return BtgmSpec(h, margin / 4.0, alpha, dim)


def generate_dataset(config: ExperimentConfig, seed: int) -> Dataset:
    """Sample the configured (shifted) BTGM."""
    spec = config.spec
    shift = spec.k // 2 if config.shift_count is None else config.shift_count
    mixture = btgm_mixture(spec, shift_count=shift, shift_rotation=config.shift_rotation)
    return sample(mixture, config.per_cluster * spec.k, seed)


def exact_partition_match(pred: np.ndarray, truth: np.ndarray) -> bool:
    """True iff the two labelings induce the identical partition."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pair = {}
    rev = {}
    for p, t in zip(pred.tolist(), truth.tolist()):
        if pair.setdefault(p, t) != t or rev.setdefault(t, p) != p:
            return False
    return True


def cut_accuracy(pred: np.ndarray, truth: np.ndarray) -> float:
    """Fraction correct under the best one-to-one cluster-class matching."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pu, pi = np.unique(pred, return_inverse=True)
    tu, ti = np.unique(truth, return_inverse=True)
    confusion = np.zeros((len(pu), len(tu)), dtype=np.int64)
    np.add.at(confusion, (pi, ti), 1)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum() / len(pred))


@dataclass
class EmbeddedPool:
    points: np.ndarray
    flat_labels: np.ndarray
    level_labels: np.ndarray | None

    @property
    def labels_matrix(self) -> np.ndarray:
        if self.level_labels is not None:
            return self.level_labels
        return self.flat_labels[:, None]


def build_pool(config: ExperimentConfig) -> EmbeddedPool:
    """Generate or ingest the evaluation pool and apply the embedding.

    Embeddings are fitted once on the whole pool; evaluation repeats
    subsample from the embedded pool afterwards.
    """
    config.validate()
    if config.embedding.startswith("external"):
        points, emb_labels = fileio.read_embedding(config.external_embedding)
        if config.external_labels:
            flat, levels = fileio.read_labels(config.external_labels)
            if len(flat) != len(points):
                raise ConfigError("labels file length does not match embedding")
        elif emb_labels is not None:
            flat, levels = emb_labels, None
        else:
            raise ConfigError("external embedding carries no labels and no "
                              "labels file was given")
    else:
        ds = generate_dataset(config, derive_seed(config.seed, 0))
        points, flat, levels = ds.points, ds.flat_labels, ds.level_labels

    if config.embedding == "pca":
        target = config.embed_dim or config.h
        model = pca_fit(points, target)
        points = pca_transform(model, points)
    elif config.embedding == "external+rescale":
        if config.gmm_file:
            gmm = fileio.read_gmm(config.gmm_file)
        else:
            k = config.gmm_components or len(np.unique(flat))
            gmm = gmm_fit(points, k, seed=derive_seed(config.seed, 1))
        points = rescale(points, gmm, RescaleConfig(config.rescale_s))
    return EmbeddedPool(points, flat, levels)


def _subsample(pool: EmbeddedPool, n: int | None, seed: int):
    total = len(pool.points)
    if n is None or n >= total:
        idx = np.arange(total)
    else:
        idx = counter_rng(seed).choice(total, size=n, replace=False)
        idx.sort()
    levels = pool.level_labels[idx] if pool.level_labels is not None else None
    return pool.points[idx], pool.flat_labels[idx], levels


METRIC_FIELDS = ("dp", "mw", "mw_opt", "mw_ratio", "dasgupta", "cut_accuracy")


def evaluate_once(points: np.ndarray, flat: np.ndarray,
                  levels: np.ndarray | None, method: str,
                  mw_weights: str = "flat") -> dict:
    """Cluster one sample and compute the full metric set.

    mw_weights picks the similarity scheme for MW/Dasgupta: "flat" uses
    the finest clusters only (w in {0,1}), which is the scheme the
    published synthetic ratios correspond to; "summed" and "deepest" use
    the full level hierarchy.
    """
    tree = cluster(points, method)
    if mw_weights == "flat" or levels is None:
        labels_matrix = flat[:, None]
        mode = "summed"
    else:
        labels_matrix = levels
        mode = mw_weights
    mw = moseley_wang_leveled(tree, labels_matrix, mode=mode)
    opt = mw_opt(labels_matrix, mode=mode)
    n = len(points)
    total_w = level_weight_totals(labels_matrix, mode=mode)
    cost = n * total_w - mw
    dp = dendrogram_purity(tree, flat).value
    k = len(np.unique(flat))
    acc = cut_accuracy(cut(tree, k), flat)
    return {
        "dp": dp,
        "mw": mw,
        "mw_opt": opt,
        "mw_ratio": mw / opt if opt > 0 else math.nan,
        "dasgupta": cost,
        "cut_accuracy": acc,
    }


def _aggregate(rows: list[dict]) -> dict:
    agg = {}
    for key in METRIC_FIELDS:
        vals = np.array([r[key] for r in rows], dtype=np.float64)
        agg[key] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=0))}
    return agg


def _run_parallel(worker, indices, threads: int):
    if threads <= 1:
        return [worker(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, indices))


def run_pipeline(config: ExperimentConfig, out_dir=None) -> dict:
    """generate/ingest -> embed -> cluster -> evaluate, R times.

    Returns {"runs": [...], "aggregate": {...}} and, if out_dir is given,
    writes runs.csv, aggregate.json, and the resolved config.json.
    """
    config.validate()
    pool = build_pool(config)

    def worker(r: int) -> dict:
        pts, flat, levels = _subsample(pool, config.eval_n, derive_seed(config.seed, 2, r))
        row = evaluate_once(pts, flat, levels, config.method, config.mw_weights)
        row["run"] = r
        return row

    rows = _run_parallel(worker, range(config.repeats), config.threads)
    rows.sort(key=lambda r: r["run"])
    result = {"runs": rows, "aggregate": _aggregate(rows)}
    if out_dir is not None:
        out = fileio.ensure_dir(out_dir)
        fileio.write_csv(
            out / "runs.csv", ["run", *METRIC_FIELDS],
            [[r["run"], *(repr(r[k]) for k in METRIC_FIELDS)] for r in rows])
        fileio.write_json(out / "aggregate.json", result["aggregate"])
        fileio.write_json(out / "config.json", config.to_dict())
    return result


def equidistant_mixture(k: int, separation: float, d: int,
                        sigma: float = 1.0) -> MixtureSpec:
    """Uniform mixture of k spherical Gaussians with all pairwise mean
    distances exactly `separation` (means on a scaled standard basis)."""
    if d < k:
        raise ConfigError(f"equidistant mixture needs d >= k, got d={d}, k={k}")
    means = np.zeros((k, d))
    means[np.arange(k), np.arange(k)] = separation / math.sqrt(2.0)
    return MixtureSpec(np.full(k, 1.0 / k), means, np.full(k, sigma))


def run_recovery_sweep(config: ExperimentConfig, separations, trials: int,
                       family: str = "equidistant", out_dir=None) -> list[dict]:
    """Per separation value: T trials of sample -> ward -> cut(k);
    reports mean DP and exact-recovery rate.

    family "equidistant" reads each grid value as the exact pairwise mean
    distance; family "btgm" reads it as the BTGM margin.
    """
    config.validate()
    separations = list(separations)
    if not separations:
        raise ConfigError("separation grid must be non-empty")
    if family not in ("equidistant", "btgm"):
        raise ConfigError("family must be 'equidistant' or 'btgm'")
    rows = []
    for si, sep in enumerate(separations):
        if family == "equidistant":
            k = 2 ** config.h
            mixture = equidistant_mixture(k, float(sep), config.dim)
        else:
            spec = benchmark_spec(config.h, float(sep), config.alpha, config.dim)
            mixture = btgm_mixture(spec)
            k = spec.k
        n = config.per_cluster * k

        def worker(t: int) -> tuple[float, bool]:
            ds = sample(mixture, n, derive_seed(config.seed, 3, si, t))
            tree = cluster(ds.points, config.method)
            dp = dendrogram_purity(tree, ds.flat_labels).value
            recovered = exact_partition_match(cut(tree, k), ds.flat_labels)
            return dp, recovered

        results = _run_parallel(worker, range(trials), config.threads)
        dps = [r[0] for r in results]
        rec = [r[1] for r in results]
        rows.append({
            "separation": float(sep),
            "mean_dp": float(np.mean(dps)),
            "recovery_rate": float(np.mean(rec)),
        })
    if out_dir is not None:
        out = fileio.ensure_dir(out_dir)
        fileio.write_csv(
            out / "sweep.csv", ["separation", "mean_dp", "recovery_rate"],
            [[repr(r["separation"]), repr(r["mean_dp"]), repr(r["recovery_rate"])]
             for r in rows])
        fileio.write_json(out / "config.json",
                          {**config.to_dict(), "separations": separations,
                           "trials": trials, "family": family})
    return rows


def run_linkage_comparison(config: ExperimentConfig, out_dir=None) -> dict:
    """All five linkage methods on identical subsamples (shared seed)."""
    config.validate()
    pool = build_pool(config)
    table: dict[str, list[dict]] = {m: [] for m in METHODS}
    for r in range(config.repeats):
        pts, flat, levels = _subsample(pool, config.eval_n, derive_seed(config.seed, 2, r))

        def worker(method: str) -> tuple[str, dict]:
            return method, evaluate_once(pts, flat, levels, method,
                                         config.mw_weights)

        for method, row in _run_parallel(worker, METHODS, config.threads):
            table[method].append(row)
    result = {m: _aggregate(rows) for m, rows in table.items()}
    if out_dir is not None:
        out = fileio.ensure_dir(out_dir)
        csv_rows = []
        for m in METHODS:
            agg = result[m]
            csv_rows.append([m] + [
                repr(agg[k][stat]) for k in ("dp", "mw_ratio")
                for stat in ("mean", "std")])
        fileio.write_csv(out / "linkage_comparison.csv",
                         ["method", "dp_mean", "dp_std", "mw_ratio_mean", "mw_ratio_std"],
                         csv_rows)
        fileio.write_json(out / "config.json", config.to_dict())
    return result


def check_reports(config: ExperimentConfig, n: int | None = None
                  ) -> dict[str, SeparationReport]:
    """Separation-condition reports for the configured BTGM."""
    spec = config.spec
    total = n if n is not None else config.per_cluster * spec.k
    mixture = btgm_mixture(spec)
    hierarchy = _btgm.Hierarchy.btgm(spec.h)
    return {
        "theorem1": _btgm.check_theorem1(mixture, total),
        "theorem2": _btgm.check_theorem2(mixture, hierarchy, total),
        "corollary": _btgm.check_corollary(spec, total),
    }
