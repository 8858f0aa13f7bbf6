"""Exact tree-quality measures: dendrogram purity, Dasgupta cost, the
Moseley-Wang objective, level-derived pair weights, and the reference
optimum for the Moseley-Wang ratio.

Pair convention: every sum ranges over unordered pairs i < j and excludes
the diagonal.  Dendrogram purity is invariant to this choice; Dasgupta
cost and Moseley-Wang would both double under the ordered convention, so
their ratio is unaffected as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dendrogram, check_refinement, lca_leaf_sets


@dataclass(frozen=True)
class Score:
    value: float
    normalizer: float

    @property
    def ratio(self) -> float:
        return self.value / self.normalizer


class UndefinedScoreError(ValueError):
    """The score has an empty normalizer (e.g. no same-class pair)."""


def _as_labels(labels: np.ndarray, n: int) -> np.ndarray:
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape != (n,):
        raise ValueError(f"labels must have length {n}")
    return lab


def dendrogram_purity(dendrogram: Dendrogram, flat_labels: np.ndarray) -> Score:
    """Average LCA-subtree purity over same-class pairs.

    Computed by sweeping the merges with per-node label histograms: a
    same-class pair first joined at node v contributes
    count_class(v) / size(v), and there are left*right such pairs per
    class at each node.  O(n * n_classes) time.
    """
    n = dendrogram.n_leaves
    labels = _as_labels(flat_labels, n)
    classes, dense = np.unique(labels, return_inverse=True)
    k = len(classes)
    counts = np.zeros((2 * n - 1, k), dtype=np.float64)
    counts[np.arange(n), dense] = 1.0
    n_pairs = sum(c * (c - 1) / 2 for c in np.bincount(dense))
    if n_pairs == 0:
        raise UndefinedScoreError("no same-class pair exists")
    sizes = np.ones(2 * n - 1, dtype=np.float64)
    total = 0.0
    for t in range(n - 1):
        a, b = int(dendrogram.lefts[t]), int(dendrogram.rights[t])
        v = n + t
        counts[v] = counts[a] + counts[b]
        sizes[v] = sizes[a] + sizes[b]
        purity = counts[v] / sizes[v]
        total += float(np.dot(counts[a] * counts[b], purity))
    return Score(total / n_pairs, float(n_pairs))


def dendrogram_purity_direct(dendrogram: Dendrogram, flat_labels: np.ndarray) -> Score:
    """Reference O(n^2) evaluation straight from the definition."""
    n = dendrogram.n_leaves
    labels = _as_labels(flat_labels, n)
    total = 0.0
    n_pairs = 0
    for _, left, right in lca_leaf_sets(dendrogram):
        leaves = np.concatenate([left, right])
        for i in left:
            for j in right:
                if labels[i] == labels[j]:
                    n_pairs += 1
                    total += np.mean(labels[leaves] == labels[i])
    if n_pairs == 0:
        raise UndefinedScoreError("no same-class pair exists")
    return Score(total / n_pairs, float(n_pairs))


def _as_weights(weights: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n, n):
        raise ValueError(f"weights must be {n} x {n}")
    if np.any(w < 0) or np.any(np.diag(w) != 0) or not np.allclose(w, w.T):
        raise ValueError("weights must be symmetric, non-negative, zero diagonal")
    return w


def dasgupta_cost(dendrogram: Dendrogram, weights: np.ndarray) -> float:
    """Sum over unordered pairs of w_ij times the LCA subtree size."""
    n = dendrogram.n_leaves
    w = _as_weights(weights, n)
    cost = 0.0
    for v, left, right in lca_leaf_sets(dendrogram):
        cross = float(w[np.ix_(left, right)].sum())
        cost += cross * dendrogram.node_size(v)
    return cost


def moseley_wang(dendrogram: Dendrogram, weights: np.ndarray) -> float:
    """n * sum_{i<j} w_ij - dasgupta_cost."""
    n = dendrogram.n_leaves
    w = _as_weights(weights, n)
    total_w = float(np.triu(w, 1).sum())
    return n * total_w - dasgupta_cost(dendrogram, w)


def level_weights(level_labels: np.ndarray, mode: str = "summed") -> np.ndarray:
    """Pairwise weights from per-level labels, level 0 coarsest.

    mode="summed": w_ij = sum_l 2^(l-1) over levels l (1-based) where the
    pair shares a label; by refinement this equals 2^lstar - 1 with lstar
    the deepest shared level.  mode="deepest": w_ij = 2^(lstar-1), 0 when
    nothing is shared.  Both are monotone in lstar.
    """
    if mode not in ("summed", "deepest"):
        raise ValueError("mode must be 'summed' or 'deepest'")
    ll = np.asarray(level_labels, dtype=np.int64)
    if ll.ndim != 2:
        raise ValueError("level_labels must be n x h")
    check_refinement(ll)
    n, h = ll.shape
    w = np.zeros((n, n), dtype=np.float64)
    for l in range(h):
        same = ll[:, l][:, None] == ll[:, l][None, :]
        if mode == "summed":
            w += (2.0 ** l) * same
        else:
            w = np.where(same, 2.0 ** l, w)  # deeper levels overwrite
    np.fill_diagonal(w, 0.0)
    return w


def level_weight_totals(level_labels: np.ndarray, mode: str = "summed") -> float:
    """sum_{i<j} w_ij for level-derived weights without materializing the
    n x n matrix."""
    ll = np.asarray(level_labels, dtype=np.int64)
    n, h = ll.shape
    same_pairs = []
    for l in range(h):
        counts = np.unique(ll[:, l], return_counts=True)[1]
        same_pairs.append(float((counts * (counts - 1) // 2).sum()))
    total = 0.0
    if mode == "summed":
        for l in range(h):
            total += (2.0 ** l) * same_pairs[l]
    else:
        # deepest shared level only: pairs sharing level l but not l+1
        for l in range(h):
            deeper = same_pairs[l + 1] if l + 1 < h else 0.0
            total += (2.0 ** l) * (same_pairs[l] - deeper)
    return total


def dasgupta_cost_leveled(dendrogram: Dendrogram, level_labels: np.ndarray,
                          mode: str = "summed") -> float:
    """Dasgupta cost under level-derived weights via per-node label
    histograms, O(n * sum_l k_l) instead of O(n^2).

    Agrees exactly with dasgupta_cost(level_weights(...)) because the
    summed weight decomposes over levels into same-label indicators.  The
    "deepest" mode falls back to the explicit weight matrix.
    """
    if mode not in ("summed", "deepest"):
        raise ValueError("mode must be 'summed' or 'deepest'")
    ll = np.asarray(level_labels, dtype=np.int64)
    check_refinement(ll)
    n, h = ll.shape
    if dendrogram.n_leaves != n:
        raise ValueError("label count does not match dendrogram")
    if mode == "deepest":
        return dasgupta_cost(dendrogram, level_weights(ll, mode=mode))
    coef = [2.0 ** l for l in range(h)]
    dense_levels = []
    ks = []
    for l in range(h):
        _, dense = np.unique(ll[:, l], return_inverse=True)
        dense_levels.append(dense)
        ks.append(dense.max() + 1)
    counts = [np.zeros((2 * n - 1, k)) for k in ks]
    for l in range(h):
        counts[l][np.arange(n), dense_levels[l]] = 1.0
    sizes = np.ones(2 * n - 1)
    cost = 0.0
    for t in range(n - 1):
        a, b = int(dendrogram.lefts[t]), int(dendrogram.rights[t])
        v = n + t
        sizes[v] = sizes[a] + sizes[b]
        cross_w = 0.0
        for l in range(h):
            counts[l][v] = counts[l][a] + counts[l][b]
            cross_w += coef[l] * float(np.dot(counts[l][a], counts[l][b]))
        cost += cross_w * sizes[v]
    return cost


def moseley_wang_leveled(dendrogram: Dendrogram, level_labels: np.ndarray,
                         mode: str = "summed") -> float:
    n = dendrogram.n_leaves
    total_w = level_weight_totals(level_labels, mode)
    return n * total_w - dasgupta_cost_leveled(dendrogram, level_labels, mode)


def _balanced_merge(groups: list[list[int]], merges: list, node_sizes: dict,
                    next_id: list[int]) -> list[int]:
    """Pairwise-merge a list of subtree roots until one remains; returns
    the surviving root as a singleton list."""
    roots = list(groups)
    while len(roots) > 1:
        nxt = []
        for i in range(0, len(roots) - 1, 2):
            a, b = roots[i], roots[i + 1]
            new = next_id[0]
            next_id[0] += 1
            merges.append((min(a, b), max(a, b)))
            node_sizes[new] = node_sizes[a] + node_sizes[b]
            nxt.append(new)
        if len(roots) % 2:
            nxt.append(roots[-1])
        roots = nxt
    return roots


def canonical_tree(level_labels: np.ndarray) -> Dendrogram:
    """Ground-truth-aligned tree: balanced binary trees inside each finest
    cluster, then balanced merging following the label hierarchy bottom-up.

    Merge heights are the merge index, which keeps the tree monotone; the
    heights carry no meaning for the objectives.
    """
    ll = np.asarray(level_labels, dtype=np.int64)
    if ll.ndim == 1:
        ll = ll[:, None]
    check_refinement(ll)
    n, h = ll.shape
    merges: list[tuple[int, int]] = []
    node_sizes = {i: 1 for i in range(n)}
    next_id = [n]

    def key(level: int, lab_row: np.ndarray) -> tuple:
        return tuple(lab_row[: level + 1])

    # roots per finest-level class
    roots: dict[tuple, int] = {}
    for lab in sorted({key(h - 1, ll[i]) for i in range(n)}):
        idx = [i for i in range(n) if key(h - 1, ll[i]) == lab]
        roots[lab] = _balanced_merge(idx, merges, node_sizes, next_id)[0]
    # climb the hierarchy, grouping sibling subtrees
    for level in range(h - 2, -2, -1):
        grouped: dict[tuple, list[int]] = {}
        for lab, root in sorted(roots.items()):
            parent = lab[: level + 1] if level >= 0 else ()
            grouped.setdefault(parent, []).append(root)
        roots = {
            lab: _balanced_merge(members, merges, node_sizes, next_id)[0]
            for lab, members in sorted(grouped.items())
        }
    lefts = np.array([a for a, _ in merges], dtype=np.int64)
    rights = np.array([b for _, b in merges], dtype=np.int64)
    return Dendrogram(n, lefts, rights, np.arange(n - 1, dtype=np.float64))


def mw_opt(level_labels: np.ndarray, mode: str = "summed") -> float:
    """Moseley-Wang value of the canonical ground-truth-aligned tree.

    Accepts flat labels (1-D) or per-level labels (n x h).  Optimality of
    the canonical tree is oracle-verified by exhaustive enumeration in the
    test suite for small n.
    """
    ll = np.asarray(level_labels, dtype=np.int64)
    if ll.ndim == 1:
        ll = ll[:, None]
    tree = canonical_tree(ll)
    return moseley_wang_leveled(tree, ll, mode=mode)


def _insert_leaf(tree, leaf):
    """Yield every tree obtained by attaching `leaf` at an edge of `tree`
    (including above the root)."""
    yield (tree, leaf)
    if isinstance(tree, tuple):
        left, right = tree
        for sub in _insert_leaf(left, leaf):
            yield (sub, right)
        for sub in _insert_leaf(right, leaf):
            yield (left, sub)


def _nested_to_dendrogram(tree, n: int) -> Dendrogram:
    merges: list[tuple[int, int]] = []

    def build(node) -> int:
        if not isinstance(node, tuple):
            return node
        a, b = build(node[0]), build(node[1])
        merges.append((min(a, b), max(a, b)))
        return n + len(merges) - 1

    build(tree)
    lefts = np.array([a for a, _ in merges], dtype=np.int64)
    rights = np.array([b for _, b in merges], dtype=np.int64)
    return Dendrogram(n, lefts, rights, np.arange(n - 1, dtype=np.float64))


def enumerate_binary_trees(n: int):
    """Yield every unordered binary tree shape over n leaves as a
    Dendrogram.  There are (2n-3)!! of them; only usable for small n.

    Enumeration inserts leaves one at a time at every edge, which
    produces each shape exactly once.
    """
    if n == 1:
        raise ValueError("no merge tree over a single leaf")
    shapes = [0]
    for leaf in range(1, n):
        shapes = [s for t in shapes for s in _insert_leaf(t, leaf)]
    for t in shapes:
        yield _nested_to_dendrogram(t, n)
