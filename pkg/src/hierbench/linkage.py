"""Agglomerative clustering: Ward via nearest-neighbor chain, plus
single/complete/average/centroid linkage and a naive greedy reference.

Merge heights are the raw merge cost of each method (Ward: the increase
in within-cluster sum of squared distances; no square-root cosmetics), so
cross-library height comparisons need an explicit transform.

Tie-break rule, used identically wherever a choice is made: prefer the
pair that is lexicographically smallest as (smaller cluster id, larger
cluster id).  The chain algorithm and the naive greedy are guaranteed to
produce identical dendrograms on tie-free inputs; under exact cost ties
only the naive path's order is specified.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import Dendrogram

METHODS = ("ward", "single", "complete", "average", "centroid")
NAIVE_CAP = 512


def ward_delta(size_a: int, centroid_a: np.ndarray,
               size_b: int, centroid_b: np.ndarray) -> float:
    """Increase in sum of squared distances caused by merging a and b:
    |a||b|/(|a|+|b|) * ||mu_a - mu_b||^2."""
    if size_a < 1 or size_b < 1:
        raise ValueError("clusters must be non-empty")
    diff = np.asarray(centroid_a, dtype=np.float64) - np.asarray(centroid_b, dtype=np.float64)
    return float(size_a * size_b / (size_a + size_b) * np.dot(diff, diff))


def _validate_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need an n x d matrix with n >= 2")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def _canonicalize(n: int, raws: list[tuple[int, int, float]]) -> Dendrogram:
    """Sort raw merges by cost and relabel to the leaves-first id scheme.

    Raw ids: 0..n-1 leaves, raw merge t creates raw id n+t.  For reducible
    linkages a merge never costs less than the merges it depends on, and the
    stable sort keeps dependents after dependencies on ties, so the sorted
    order is always realizable.
    """
    costs = np.array([c for _, _, c in raws])
    order = np.argsort(costs, kind="stable")
    parent = np.arange(2 * n - 1, dtype=np.int64)
    node_of = np.arange(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    lefts = np.empty(n - 1, dtype=np.int64)
    rights = np.empty(n - 1, dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)
    for t, r in enumerate(order):
        a, b, cost = raws[r]
        ra, rb = find(a), find(b)
        na, nb = node_of[ra], node_of[rb]
        lefts[t], rights[t] = min(na, nb), max(na, nb)
        heights[t] = cost
        parent[ra] = rb
        parent[n + r] = rb  # raw id minted by this merge joins the set
        node_of[rb] = n + t
    return Dendrogram(n, lefts, rights, heights)


def _nn_chain_ward(points: np.ndarray) -> Dendrogram:
    """Matrix-free nearest-neighbor chain over centroid/size state.

    O(n^2 d) time and O(n d) memory; no pairwise distance matrix.
    """
    n = points.shape[0]
    m = 2 * n - 1
    centroids = np.zeros((m, points.shape[1]))
    centroids[:n] = points
    sizes = np.zeros(m, dtype=np.int64)
    sizes[:n] = 1
    active = np.zeros(m, dtype=bool)
    active[:n] = True
    raws: list[tuple[int, int, float]] = []
    chain: list[int] = []
    next_id = n
    n_active = n
    ids = np.arange(m)

    while n_active > 1:
        if not chain:
            chain.append(int(ids[active][0]))
        while True:
            c = chain[-1]
            mask = active.copy()
            mask[c] = False
            cand = ids[mask]
            diff = centroids[cand] - centroids[c]
            cost = sizes[cand] * sizes[c] / (sizes[cand] + sizes[c]) * np.einsum(
                "ij,ij->i", diff, diff)
            best = int(np.argmin(cost))
            nn, nn_cost = int(cand[best]), float(cost[best])
            prev = chain[-2] if len(chain) > 1 else -1
            # on an exact tie keep following the chain predecessor so the
            # chain terminates
            if prev >= 0 and cost[cand == prev][0] == nn_cost:
                nn = prev
            if nn == prev:
                chain.pop()
                chain.pop()
                a, b = (c, prev) if c < prev else (prev, c)
                raws.append((a, b, nn_cost))
                sa, sb = sizes[a], sizes[b]
                centroids[next_id] = (sa * centroids[a] + sb * centroids[b]) / (sa + sb)
                sizes[next_id] = sa + sb
                active[a] = active[b] = False
                active[next_id] = True
                next_id += 1
                n_active -= 1
                break
            chain.append(nn)
    return _canonicalize(n, raws)


_LW = {
    "single": lambda da, db, sa, sb, ss: np.minimum(da, db),
    "complete": lambda da, db, sa, sb, ss: np.maximum(da, db),
    "average": lambda da, db, sa, sb, ss: (sa * da + sb * db) / (sa + sb),
}


def _nn_chain_distance(points: np.ndarray, method: str) -> Dendrogram:
    """Nearest-neighbor chain over a stored distance matrix with
    Lance-Williams updates (single/complete/average)."""
    n = points.shape[0]
    dist = squareform(pdist(points))
    np.fill_diagonal(dist, np.inf)
    slot_id = np.arange(n, dtype=np.int64)  # slot -> raw cluster id
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    update = _LW[method]
    raws: list[tuple[int, int, float]] = []
    chain: list[int] = []
    next_id = n
    n_active = n
    slots = np.arange(n)

    while n_active > 1:
        if not chain:
            chain.append(int(slots[active][0]))
        while True:
            c = chain[-1]
            row = np.where(active, dist[c], np.inf)
            row[c] = np.inf
            nn = int(np.argmin(row))
            nn_cost = float(row[nn])
            prev = chain[-2] if len(chain) > 1 else -1
            if prev >= 0 and row[prev] == nn_cost:
                nn = prev
            if nn == prev:
                chain.pop()
                chain.pop()
                ia, ib = slot_id[c], slot_id[prev]
                a, b = (ia, ib) if ia < ib else (ib, ia)
                raws.append((int(a), int(b), nn_cost))
                sa, sb = sizes[c], sizes[prev]
                new_row = update(dist[c], dist[prev], sa, sb, sa + sb)
                dist[c, :] = new_row
                dist[:, c] = new_row
                dist[c, c] = np.inf
                slot_id[c] = next_id
                sizes[c] = sa + sb
                active[prev] = False
                next_id += 1
                n_active -= 1
                break
            chain.append(nn)
    return _canonicalize(n, raws)


def _greedy_centroid(points: np.ndarray) -> Dendrogram:
    """Global greedy merge on centroid distances.

    Centroid linkage is not reducible, so the chain algorithm does not
    apply; merges are emitted in greedy order and heights may invert.
    """
    n = points.shape[0]
    centroids = points.copy()
    sizes = np.ones(n, dtype=np.int64)
    node = np.arange(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    dist = squareform(pdist(points))
    np.fill_diagonal(dist, np.inf)
    lefts = np.empty(n - 1, dtype=np.int64)
    rights = np.empty(n - 1, dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)
    for t in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], dist, np.inf)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        # prefer smallest (node id) pair under exact ties
        ties = np.argwhere(masked == masked[i, j])
        if len(ties) > 2:
            pairs = sorted(
                (tuple(sorted((node[a], node[b]))), (a, b))
                for a, b in ties if a < b)
            (_, (i, j)) = pairs[0]
        na, nb = node[i], node[j]
        lefts[t], rights[t] = min(na, nb), max(na, nb)
        heights[t] = masked[i, j]
        si, sj = sizes[i], sizes[j]
        centroids[i] = (si * centroids[i] + sj * centroids[j]) / (si + sj)
        sizes[i] = si + sj
        node[i] = n + t
        active[j] = False
        new_d = np.linalg.norm(centroids[active] - centroids[i], axis=1)
        dist[i, active] = new_d
        dist[active, i] = new_d
        dist[i, i] = np.inf
    return Dendrogram(n, lefts, rights, heights)


def cluster(points: np.ndarray, method: str = "ward") -> Dendrogram:
    """Agglomerate points with the given linkage method."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    pts = _validate_points(points)
    if method == "ward":
        return _nn_chain_ward(pts)
    if method == "centroid":
        return _greedy_centroid(pts)
    return _nn_chain_distance(pts, method)


def _naive_cost(method: str, members_a, members_b, dist, centroids, sizes, a, b) -> float:
    if method == "ward":
        return ward_delta(sizes[a], centroids[a], sizes[b], centroids[b])
    if method == "centroid":
        return float(np.linalg.norm(centroids[a] - centroids[b]))
    block = dist[np.ix_(members_a, members_b)]
    if method == "single":
        return float(block.min())
    if method == "complete":
        return float(block.max())
    return float(block.mean())


def cluster_naive(points: np.ndarray, method: str = "ward",
                  cap: int = NAIVE_CAP) -> Dendrogram:
    """O(n^3) greedy reference: repeatedly merge the globally cheapest
    active pair, recomputing costs from scratch state each step."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    pts = _validate_points(points)
    n = pts.shape[0]
    if n > cap:
        raise ValueError(f"n={n} exceeds the naive oracle cap {cap}")
    dist = squareform(pdist(pts))
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    centroids = {i: pts[i].copy() for i in range(n)}
    sizes = {i: 1 for i in range(n)}
    lefts = np.empty(n - 1, dtype=np.int64)
    rights = np.empty(n - 1, dtype=np.int64)
    heights = np.empty(n - 1, dtype=np.float64)
    for t in range(n - 1):
        best = None
        ids = sorted(members)
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                a, b = ids[x], ids[y]
                cost = _naive_cost(method, members[a], members[b], dist,
                                   centroids, sizes, a, b)
                if best is None or cost < best[0]:
                    best = (cost, a, b)
        cost, a, b = best
        lefts[t], rights[t] = a, b
        heights[t] = cost
        new = n + t
        members[new] = members.pop(a) + members.pop(b)
        centroids[new] = (sizes[a] * centroids.pop(a) + sizes[b] * centroids.pop(b)) / (
            sizes[a] + sizes[b])
        sizes[new] = sizes.pop(a) + sizes.pop(b)
    return Dendrogram(n, lefts, rights, heights)
