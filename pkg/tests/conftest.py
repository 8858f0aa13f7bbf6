"""Shared helpers for the test suite."""

import numpy as np

from hierbench.core import Dendrogram, counter_rng


def random_tree(seed: int, n: int) -> Dendrogram:
    """Uniformly random merge order over n leaves.

    Heights are the merge index so the tree is monotone.
    """
    rng = counter_rng(seed)
    active = list(range(n))
    lefts, rights = [], []
    for t in range(n - 1):
        i, j = sorted(rng.choice(len(active), size=2, replace=False))
        b = active.pop(j)
        a = active.pop(i)
        lefts.append(min(a, b))
        rights.append(max(a, b))
        active.append(n + t)
    return Dendrogram(n, np.array(lefts), np.array(rights),
                      np.arange(n - 1, dtype=np.float64))


def random_points(seed: int, n: int, d: int) -> np.ndarray:
    return counter_rng(seed).normal(size=(n, d))
