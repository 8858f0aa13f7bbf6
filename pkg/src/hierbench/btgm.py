"""Binary Tree Gaussian Mixture: planted-hierarchy generator and
separation-condition checkers.

The mixture has 2^h spherical components whose means encode a complete
binary tree: the sign of coordinate j of mean i is the j-th most
significant bit of the leaf index i, and its magnitude is m * alpha^(h-j).
Two means therefore differ first in the coordinate of their lowest common
ancestor's level, which makes inter-mean distance grow with tree distance.

Default constants for the recovery conditions: c=17, c0=16 (flat
k-clustering condition), c1=8 (per-level hierarchy condition).  All are
caller-overridable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, StructuralError, uniform_block

try:
    from scipy.special import ndtri  # inverse normal CDF
except ImportError:  # pragma: no cover
    ndtri = None

DEFAULT_C = 17.0
DEFAULT_C0 = 16.0
DEFAULT_C1 = 8.0


@dataclass(frozen=True)
class BtgmSpec:
    """Parameters of the planted binary-tree mixture."""

    h: int
    m: float
    alpha: float
    d: int

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if self.m <= 0:
            raise ValueError("margin m must be > 0")
        if self.alpha <= 1:
            raise ValueError("expansion ratio alpha must be > 1")
        if self.d < self.h:
            raise ValueError(f"d={self.d} must be >= h={self.h}")

    @property
    def k(self) -> int:
        return 2 ** self.h


@dataclass(frozen=True)
class MixtureSpec:
    """General k-mixture of spherical Gaussians (w_i, mu_i, sigma_i)."""

    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    h: int | None = None  # set when the mixture is a BTGM (enables level labels)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        sd = np.asarray(self.stddevs, dtype=np.float64)
        if mu.ndim != 2 or len(w) != mu.shape[0] or len(sd) != mu.shape[0]:
            raise ValueError("weights, means, stddevs must agree on k")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(sd <= 0) or not np.all(np.isfinite(mu)):
            raise ValueError("stddevs must be positive and means finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stddevs", sd)

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def nu(self) -> float:
        """Maximum weight ratio max_{l != t} w_l / w_t."""
        w = self.weights
        return float(w.max() / w.min()) if self.k > 1 else 1.0


@dataclass(frozen=True)
class Hierarchy:
    """Refinement chain of partitions of component indices [k].

    levels[0] is the finest level; each later level must coarsen the
    previous one, and each level must partition [k] exactly.
    """

    k: int
    levels: tuple[tuple[frozenset[int], ...], ...]

    @staticmethod
    def from_lists(k: int, levels) -> "Hierarchy":
        lv = tuple(tuple(frozenset(block) for block in level) for level in levels)
        hier = Hierarchy(k, lv)
        hier.validate()
        return hier

    def validate(self) -> None:
        for level in self.levels:
            seen: set[int] = set()
            for block in level:
                if not block or block & seen:
                    raise StructuralError("level does not partition [k]")
                seen |= block
            if seen != set(range(self.k)):
                raise StructuralError("level does not cover [k]")
        for fine, coarse in zip(self.levels, self.levels[1:]):
            for block in fine:
                if not any(block <= parent for parent in coarse):
                    raise StructuralError("levels are not a refinement chain")

    @staticmethod
    def btgm(h: int) -> "Hierarchy":
        """Planted hierarchy of a height-h BTGM: level l groups leaves by
        their first h-1-l index bits."""
        k = 2 ** h
        levels = []
        for l in range(h - 1, 0, -1):
            width = 2 ** (h - l)
            levels.append([range(b * width, (b + 1) * width) for b in range(2 ** l)])
        if h >= 1:
            levels.insert(0, [[i] for i in range(k)])
        return Hierarchy.from_lists(k, levels)


def btgm_means(spec: BtgmSpec) -> np.ndarray:
    """2^h x d matrix of planted means."""
    k, h = spec.k, spec.h
    means = np.zeros((k, spec.d), dtype=np.float64)
    for i in range(k):
        for j in range(1, h + 1):
            bit = (i >> (h - j)) & 1
            means[i, j - 1] = (-1.0) ** bit * spec.m * spec.alpha ** (h - j)
    return means


def shift_means(means: np.ndarray, count: int, rotation: int) -> np.ndarray:
    """Cyclically right-rotate the coordinates of the first `count` rows.

    Row norms and all pairwise distances within the shifted group are
    preserved exactly; the operation is non-linear in the sense that no
    single linear map realizes it on the whole mean set.
    """
    means = np.asarray(means, dtype=np.float64)
    k, d = means.shape
    if not 0 <= count <= k:
        raise ValueError(f"count={count} out of range [0, {k}]")
    if not 0 <= rotation < d:
        raise ValueError(f"rotation={rotation} out of range [0, {d})")
    out = means.copy()
    out[:count] = np.roll(means[:count], rotation, axis=1)
    return out


def btgm_mixture(spec: BtgmSpec, shift_count: int | None = None,
                 shift_rotation: int | None = None) -> MixtureSpec:
    """Uniform unit-variance mixture over the (optionally shifted) means.

    Defaults shift nothing; pass shift_count=spec.k // 2 and
    shift_rotation=spec.d // 2 for the standard shifted benchmark.
    """
    means = btgm_means(spec)
    if shift_count:
        rotation = spec.d // 2 if shift_rotation is None else shift_rotation
        means = shift_means(means, shift_count, rotation)
    k = spec.k
    return MixtureSpec(np.full(k, 1.0 / k), means, np.ones(k), h=spec.h)


def sample(mixture: MixtureSpec, n: int, seed: int) -> Dataset:
    """Draw n i.i.d. points from the mixture.

    Point i consumes exactly d+1 uniforms from a Philox counter stream
    keyed by `seed` (one for the component draw, d turned into normal
    deviates by the inverse CDF), so the draw for any point is independent
    of how many other points are materialized.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = mixture.d
    u = uniform_block(seed, n, d + 1)
    cum = np.cumsum(mixture.weights)
    comp = np.searchsorted(cum, u[:, 0], side="right")
    comp = np.minimum(comp, mixture.k - 1)
    z = ndtri(np.clip(u[:, 1:], 1e-16, 1 - 1e-16))
    points = mixture.means[comp] + mixture.stddevs[comp, None] * z
    level_labels = None
    if mixture.h is not None and mixture.k == 2 ** mixture.h:
        h = mixture.h
        level_labels = np.stack([comp >> (h - l) for l in range(1, h + 1)], axis=1)
    return Dataset(points, flat_labels=comp, level_labels=level_labels)


def radius_bound(sigma: float, d: int, n: int) -> float:
    """High-probability sample-cluster radius sigma*(sqrt(d)+2*sqrt(log n))."""
    return sigma * (math.sqrt(d) + 2.0 * math.sqrt(math.log(n)))


@dataclass
class ConditionCheck:
    name: str
    passed: bool
    margin: float  # value - threshold; >= 0 iff passed
    detail: str = ""


@dataclass
class SeparationReport:
    """Exact plug-in evaluation of a recovery condition."""

    passed: bool
    checks: list[ConditionCheck] = field(default_factory=list)
    radii: np.ndarray | None = None          # S_i per component
    dist_upper: np.ndarray | None = None     # D_ij^+
    dist_lower: np.ndarray | None = None     # D_ij^-
    tightest_pair: tuple[int, int] | None = None

    def __str__(self) -> str:
        lines = [f"overall: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"  [{status}] {c.name}: margin {c.margin:+.6g}  {c.detail}")
        return "\n".join(lines)


def _pair_quantities(mixture: MixtureSpec, n: int):
    mu, sd = mixture.means, mixture.stddevs
    dist = np.linalg.norm(mu[:, None, :] - mu[None, :, :], axis=2)
    s = np.array([radius_bound(float(sig), mixture.d, n) for sig in sd])
    upper = dist + s[:, None] + s[None, :]
    lower = dist - s[:, None] - s[None, :]
    return dist, s, upper, lower


def check_theorem1(mixture: MixtureSpec, n: int, c: float = DEFAULT_C,
                   c0: float = DEFAULT_C0) -> SeparationReport:
    """Flat k-clustering recovery condition.

    Requires, for all i != j,
      ||mu_i - mu_j|| >= c * sqrt(nu) * (sigma_i + sigma_j) * (sqrt(d) + sqrt(log n)),
    and the sample-size bound n >= c0 * log(k) / w_min.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k, d = mixture.k, mixture.d
    dist, s, upper, lower = _pair_quantities(mixture, n)
    nu = mixture.nu
    scale = math.sqrt(d) + math.sqrt(math.log(n))
    sd = mixture.stddevs
    need = c * math.sqrt(nu) * (sd[:, None] + sd[None, :]) * scale
    margins = dist - need
    np.fill_diagonal(margins, np.inf)
    i, j = np.unravel_index(np.argmin(margins), margins.shape)
    sep_check = ConditionCheck(
        "mean separation", bool(margins[i, j] >= 0), float(margins[i, j]),
        f"tightest pair ({i},{j}): distance {dist[i, j]:.6g} vs required {need[i, j]:.6g}",
    )
    n_need = c0 * math.log(k) / float(mixture.weights.min()) if k > 1 else 0.0
    size_check = ConditionCheck(
        "sample size", n >= n_need, float(n - n_need),
        f"n={n} vs required {n_need:.6g}",
    )
    return SeparationReport(
        passed=sep_check.passed and size_check.passed,
        checks=[sep_check, size_check],
        radii=s, dist_upper=upper, dist_lower=lower,
        tightest_pair=(int(i), int(j)),
    )


def check_theorem2(mixture: MixtureSpec, hierarchy: Hierarchy, n: int,
                   c1: float = DEFAULT_C1, combine: str = "max") -> SeparationReport:
    """Per-level hierarchy recovery condition.

    For every level and every pair of distinct blocks I, J at that level,
      D_{I,J}^- >= c1 * sqrt(nu_l) * max(D_{I,I}^+, D_{J,J}^+),
    where nu_l is the maximum block-weight ratio at the level.  Pass
    combine="sum" to use D_{I,I}^+ + D_{J,J}^+ instead of the max.
    """
    if combine not in ("max", "sum"):
        raise ValueError("combine must be 'max' or 'sum'")
    hierarchy.validate()
    if hierarchy.k != mixture.k:
        raise StructuralError("hierarchy is not over the mixture's components")
    _, s, upper, lower = _pair_quantities(mixture, n)
    w = mixture.weights
    checks = []
    for l, level in enumerate(hierarchy.levels):
        blocks = [sorted(b) for b in level]
        bw = np.array([w[b].sum() for b in blocks])
        nu_l = float(bw.max() / bw.min()) if len(blocks) > 1 else 1.0
        d_self = [float(upper[np.ix_(b, b)].max()) for b in blocks]
        worst = math.inf
        detail = "single block"
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                d_cross = float(lower[np.ix_(blocks[a], blocks[b])].min())
                if combine == "max":
                    within = max(d_self[a], d_self[b])
                else:
                    within = d_self[a] + d_self[b]
                margin = d_cross - c1 * math.sqrt(nu_l) * within
                if margin < worst:
                    worst = margin
                    detail = (f"blocks {a},{b}: cross lower {d_cross:.6g} vs "
                              f"c1*sqrt(nu_l)*{combine} {c1 * math.sqrt(nu_l) * within:.6g}")
        passed = worst >= 0 or not math.isfinite(worst)
        checks.append(ConditionCheck(f"level {l} separation", passed,
                                     worst if math.isfinite(worst) else 0.0, detail))
    return SeparationReport(
        passed=all(c.passed for c in checks), checks=checks,
        radii=s, dist_upper=upper, dist_lower=lower,
    )


def check_corollary(spec: BtgmSpec, n: int, c: float = DEFAULT_C,
                    c0: float = DEFAULT_C0, c1: float = DEFAULT_C1) -> SeparationReport:
    """Well-separation condition for the BTGM itself.

    Requires alpha > c1, margin m >= 2*max(c, c2)*(sqrt(d)+sqrt(log n))
    with c2 = 2*(2*c1+1)/(alpha-c1), and n >= c0 * k * log(k).
    """
    k = spec.k
    checks = []
    alpha_ok = spec.alpha > c1
    checks.append(ConditionCheck("expansion ratio", alpha_ok,
                                 spec.alpha - c1, f"alpha={spec.alpha} vs c1={c1}"))
    if alpha_ok:
        c2 = 2.0 * (2.0 * c1 + 1.0) / (spec.alpha - c1)
        m_need = 2.0 * max(c, c2) * (math.sqrt(spec.d) + math.sqrt(math.log(n)))
        checks.append(ConditionCheck("margin", spec.m >= m_need, spec.m - m_need,
                                     f"m={spec.m} vs required {m_need:.6g}"))
    else:
        checks.append(ConditionCheck("margin", False, -math.inf,
                                     "c2 undefined for alpha <= c1"))
    n_need = c0 * k * math.log(k)
    checks.append(ConditionCheck("sample size", n >= n_need, n - n_need,
                                 f"n={n} vs required {n_need:.6g}"))
    return SeparationReport(passed=all(c_.passed for c_ in checks), checks=checks)
