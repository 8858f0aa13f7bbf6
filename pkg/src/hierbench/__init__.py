"""Hierarchical clustering toolkit: planted Gaussian-mixture benchmarks,
linkage-based agglomerative clustering, and exact tree-quality metrics."""

from .btgm import (
    BtgmSpec,
    Hierarchy,
    MixtureSpec,
    btgm_means,
    btgm_mixture,
    check_corollary,
    check_theorem1,
    check_theorem2,
    sample,
    shift_means,
)
from .core import Dataset, Dendrogram, cut, derive_seed, lca_leaf_sets
from .embed import GmmParams, PcaModel, assign, gmm_fit, pca_fit, pca_transform, rescale
from .linkage import cluster, cluster_naive, ward_delta
from .metrics import (
    dasgupta_cost,
    dendrogram_purity,
    level_weights,
    moseley_wang,
    mw_opt,
)

__version__ = "0.1.0"

__all__ = [
    "BtgmSpec", "Hierarchy", "MixtureSpec", "btgm_means", "btgm_mixture",
    "check_corollary", "check_theorem1", "check_theorem2", "sample",
    "shift_means", "Dataset", "Dendrogram", "cut", "derive_seed",
    "lca_leaf_sets", "GmmParams", "PcaModel", "assign", "gmm_fit",
    "pca_fit", "pca_transform", "rescale", "cluster", "cluster_naive",
    "ward_delta", "dasgupta_cost", "dendrogram_purity", "level_weights",
    "moseley_wang", "mw_opt",
]
