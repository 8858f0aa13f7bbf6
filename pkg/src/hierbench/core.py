"""Shared domain types: datasets, dendrograms, and deterministic randomness.

Node id convention for dendrograms: leaves are ids 0..n-1 and the t-th
merge (0-based) creates internal node id n+t, so the root is 2n-2.  This
matches the encoding used by common linkage outputs and keeps the tree
array-backed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox


class StructuralError(ValueError):
    """A dendrogram or hierarchy violates its structural invariants."""


@dataclass(frozen=True)
class Dataset:
    """Points with optional flat and per-level hierarchical labels.

    level_labels has one column per hierarchy level, level 0 coarsest.
    Level l labels must refine level l-1 labels.
    """

    points: np.ndarray
    flat_labels: np.ndarray | None = None
    level_labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must be a non-empty n x d matrix")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.flat_labels is not None:
            fl = np.asarray(self.flat_labels, dtype=np.int64)
            if fl.shape != (pts.shape[0],):
                raise ValueError("flat_labels must have length n")
            object.__setattr__(self, "flat_labels", fl)
        if self.level_labels is not None:
            ll = np.asarray(self.level_labels, dtype=np.int64)
            if ll.ndim != 2 or ll.shape[0] != pts.shape[0]:
                raise ValueError("level_labels must be n x h")
            check_refinement(ll)
            object.__setattr__(self, "level_labels", ll)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def check_refinement(level_labels: np.ndarray) -> None:
    """Raise if finer levels do not refine coarser ones.

    Equal labels at level l must imply equal labels at level l-1, i.e.
    each level-l class maps into exactly one level-(l-1) class.
    """
    ll = np.asarray(level_labels)
    for l in range(1, ll.shape[1]):
        fine, coarse = ll[:, l], ll[:, l - 1]
        for lab in np.unique(fine):
            if len(np.unique(coarse[fine == lab])) > 1:
                raise ValueError(
                    f"level {l} labels do not refine level {l - 1} (class {lab})"
                )


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree: n-1 ordered merges over node ids 0..2n-2."""

    n_leaves: int
    lefts: np.ndarray
    rights: np.ndarray
    heights: np.ndarray
    sizes: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = self.n_leaves
        if n < 1:
            raise StructuralError("need at least one leaf")
        lefts = np.asarray(self.lefts, dtype=np.int64)
        rights = np.asarray(self.rights, dtype=np.int64)
        heights = np.asarray(self.heights, dtype=np.float64)
        if not (len(lefts) == len(rights) == len(heights) == n - 1):
            raise StructuralError("expected exactly n-1 merges")
        object.__setattr__(self, "lefts", lefts)
        object.__setattr__(self, "rights", rights)
        object.__setattr__(self, "heights", heights)

        consumed = np.zeros(2 * n - 1, dtype=bool)
        sizes = np.ones(2 * n - 1, dtype=np.int64)
        for t in range(n - 1):
            for child in (lefts[t], rights[t]):
                if not (0 <= child < n + t):
                    raise StructuralError(f"merge {t}: child id {child} out of range")
                if consumed[child]:
                    raise StructuralError(f"merge {t}: node {child} consumed twice")
                consumed[child] = True
            sizes[n + t] = sizes[lefts[t]] + sizes[rights[t]]
        if n > 1 and consumed[2 * n - 2]:
            raise StructuralError("root must not be consumed")
        want = np.asarray(self.sizes, dtype=np.int64) if self.sizes is not None else None
        if want is not None and not np.array_equal(want, sizes[n:]):
            raise StructuralError("stored merge sizes disagree with children")
        object.__setattr__(self, "sizes", sizes[n:].copy())

    @property
    def n_merges(self) -> int:
        return self.n_leaves - 1

    def node_size(self, node: int) -> int:
        return 1 if node < self.n_leaves else int(self.sizes[node - self.n_leaves])


def lca_leaf_sets(dendrogram: Dendrogram):
    """Yield (node_id, left_leaves, right_leaves) for every internal node.

    Every unordered leaf pair (i, j) is attributed to exactly one internal
    node, its LCA: the pairs crossing left_leaves x right_leaves.
    """
    n = dendrogram.n_leaves
    leafsets: dict[int, np.ndarray] = {i: np.array([i], dtype=np.int64) for i in range(n)}
    for t in range(n - 1):
        a, b = int(dendrogram.lefts[t]), int(dendrogram.rights[t])
        left, right = leafsets.pop(a), leafsets.pop(b)
        yield n + t, left, right
        leafsets[n + t] = np.concatenate([left, right])


def cut(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Cluster labels induced by removing the last k-1 merges.

    Returns labels 0..k-1, assigned in order of the smallest leaf id
    contained in each cluster, so the result is deterministic.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range [1, {n}]")
    parent = np.arange(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for t in range(n - k):
        parent[find(int(dendrogram.lefts[t]))] = n + t
        parent[find(int(dendrogram.rights[t]))] = n + t

    roots = np.array([find(i) for i in range(n)], dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    mapping: dict[int, int] = {}
    for i in range(n):
        if roots[i] not in mapping:
            mapping[roots[i]] = len(mapping)
        labels[i] = mapping[roots[i]]
    assert len(mapping) == k
    return labels


def derive_seed(master_seed: int, *path: int) -> int:
    """Stable 64-bit sub-seed for a named stream under a master seed."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(path))
    state = ss.generate_state(2, dtype=np.uint64)
    return int(state[0])


def counter_rng(seed: int) -> Generator:
    """Counter-based generator; identical seed gives identical streams
    on every platform."""
    return Generator(Philox(key=np.uint64(seed)))


def uniform_block(seed: int, n: int, m: int) -> np.ndarray:
    """n x m uniforms on a Philox counter stream.

    Each double consumes exactly one 64-bit word, so row i always sees
    words [i*m, (i+1)*m) regardless of how many rows are drawn.
    """
    return counter_rng(seed).random((n, m), dtype=np.float64)
