"""Quality oracles, diversity measures, and evaluation-count accounting.

Cost model: one combined objective call is 1 evaluation, one evolutionary
iteration is 1 evaluation, a greedy step scanning c candidates is c
evaluations, and a local-search sweep charges its neighborhood size.
Algorithms charge the run's counter explicitly by that model; low-level
value/marginal helpers never charge on their own.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np

from .core import DistanceMatrix, Instance, Subset


class InfiniteDiversity:
    """Tagged plus-infinity for the undefined min-distance of sets with fewer
    than two items. Compares greater than every finite value and equal to
    itself; kept as an explicit object (not a float special) so serialization
    stays unambiguous."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "INFINITE_DIVERSITY"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, InfiniteDiversity)

    def __hash__(self) -> int:
        return hash("InfiniteDiversity")

    def __gt__(self, other: object) -> bool:
        return not isinstance(other, InfiniteDiversity)

    def __ge__(self, other: object) -> bool:
        return True

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return isinstance(other, InfiniteDiversity)


INFINITE_DIVERSITY = InfiniteDiversity()

DiversityValue = Union[float, InfiniteDiversity]


class EvaluationCounter:
    """Monotone per-run accumulator of objective-function evaluations."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, cost: int = 1) -> None:
        if cost < 0:
            raise ValueError("evaluation cost must be nonnegative")
        self.count += cost

    def __repr__(self) -> str:
        return f"EvaluationCounter({self.count})"


class QualityOracle:
    """Monotone submodular set function with value(empty) = 0."""

    n: int

    def value(self, subset: Subset) -> float:
        raise NotImplementedError

    def marginal(self, subset: Subset, item: int) -> float:
        """Gain of adding ``item`` (which must be outside ``subset``)."""
        raise NotImplementedError

    def marginals_all(self, subset: Subset) -> np.ndarray:
        """Vector of add-gains for every item; entries of members are undefined
        and must be masked by the caller."""
        out = np.empty(self.n)
        bits = subset.bits
        for i in range(self.n):
            out[i] = self.marginal(subset, i) if not bits[i] else 0.0
        return out


class ModularQuality(QualityOracle):
    """Sum of per-item weights; submodular with equality."""

    __slots__ = ("weights", "n")

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        self.weights = weights
        self.weights.setflags(write=False)
        self.n = int(weights.size)

    def value(self, subset: Subset) -> float:
        return float(self.weights[subset.bits].sum())

    def marginal(self, subset: Subset, item: int) -> float:
        if item in subset:
            raise ValueError(f"item {item} already selected")
        return float(self.weights[item])

    def marginals_all(self, subset: Subset) -> np.ndarray:
        return self.weights.copy()


class TopPMIQuality(QualityOracle):
    """Per-label sums of the p largest mutual-information scores among the
    selected items (all of them while fewer than p are selected)."""

    __slots__ = ("mi", "p", "n", "n_labels")

    def __init__(self, mi: np.ndarray, p: int):
        mi = np.asarray(mi, dtype=float)
        if mi.ndim != 2:
            raise ValueError("mutual-information scores must form an items-by-labels matrix")
        if p < 1:
            raise ValueError("p must be a positive integer")
        if np.any(mi < 0) or np.any(mi > 1):
            raise ValueError("normalized mutual information must lie in [0, 1]")
        self.mi = mi
        self.mi.setflags(write=False)
        self.p = int(p)
        self.n, self.n_labels = (int(d) for d in mi.shape)

    def value(self, subset: Subset) -> float:
        m = subset.members()
        if m.size == 0:
            return 0.0
        sub = self.mi[m]
        if m.size <= self.p:
            return float(sub.sum())
        part = np.partition(sub, m.size - self.p, axis=0)[m.size - self.p :]
        return float(part.sum())

    def _thresholds(self, members: np.ndarray) -> Optional[np.ndarray]:
        """Per-label p-th largest selected score, or None while below p items."""
        if members.size < self.p:
            return None
        sub = self.mi[members]
        return np.partition(sub, members.size - self.p, axis=0)[members.size - self.p]

    def marginal(self, subset: Subset, item: int) -> float:
        if item in subset:
            raise ValueError(f"item {item} already selected")
        thr = self._thresholds(subset.members())
        if thr is None:
            return float(self.mi[item].sum())
        return float(np.clip(self.mi[item] - thr, 0.0, None).sum())

    def marginals_all(self, subset: Subset) -> np.ndarray:
        thr = self._thresholds(subset.members())
        if thr is None:
            return self.mi.sum(axis=1)
        return np.clip(self.mi - thr[None, :], 0.0, None).sum(axis=1)


def sum_diversity(subset: Subset, d: DistanceMatrix) -> float:
    """Sum of distances over unordered member pairs; 0 for fewer than 2 items."""
    m = subset.members()
    if m.size <= 1:
        return 0.0
    return float(d.values[np.ix_(m, m)].sum()) / 2.0


def sum_diversity_marginal(subset: Subset, item: int, d: DistanceMatrix) -> float:
    """Increase of the pairwise sum when ``item`` joins ``subset``."""
    if item in subset:
        raise ValueError(f"item {item} already selected")
    m = subset.members()
    if m.size == 0:
        return 0.0
    return float(d.values[item, m].sum())


def min_diversity(subset: Subset, d: DistanceMatrix) -> DiversityValue:
    """Minimum pairwise distance, or the infinite sentinel below two items."""
    m = subset.members()
    if m.size <= 1:
        return INFINITE_DIVERSITY
    sub = d.values[np.ix_(m, m)]
    return float(sub[~np.eye(m.size, dtype=bool)].min())


def mst_diversity(subset: Subset, d: DistanceMatrix) -> float:
    """Minimum-spanning-tree weight of the complete graph on the members.

    Prim's algorithm over a dense view; selected subsets are small, so no
    priority queue is needed.
    """
    m = subset.members()
    s = int(m.size)
    if s <= 1:
        return 0.0
    sub = d.values[np.ix_(m, m)]
    in_tree = np.zeros(s, dtype=bool)
    in_tree[0] = True
    best = sub[0].copy()
    best[0] = np.inf
    total = 0.0
    for _ in range(s - 1):
        j = int(np.argmin(np.where(in_tree, np.inf, best)))
        total += float(best[j])
        in_tree[j] = True
        best = np.minimum(best, sub[j])
        best[j] = np.inf
    return total


def permutation_mst_proxy(perm: Sequence[int], d: DistanceMatrix) -> float:
    """Sum over positions of the distance to the nearest predecessor.

    Over-approximates the spanning-tree weight of the underlying set by at
    most a log factor; the exact value depends on the ordering.
    """
    if len(set(perm)) != len(perm):
        raise ValueError("permutation has duplicate items")
    total = 0.0
    for i in range(1, len(perm)):
        prev = np.asarray(perm[:i])
        total += float(d.values[perm[i], prev].min())
    return total


def diversity_value(subset: Subset, inst: Instance) -> DiversityValue:
    if inst.diversity == "sum":
        return sum_diversity(subset, inst.distance)
    if inst.diversity == "min":
        return min_diversity(subset, inst.distance)
    return mst_diversity(subset, inst.distance)


def objective(subset: Subset, inst: Instance, counter: Optional[EvaluationCounter] = None) -> float:
    """Combined value: quality plus tradeoff times diversity. Charges 1.

    For min-diversity sets below two items the reported value is ``math.inf``
    when the tradeoff is positive; such sets are never feasible for the
    original problem, so callers treat this only as a flagged report.
    """
    if counter is not None:
        counter.add(1)
    q = inst.quality.value(subset)
    if inst.lam == 0.0:
        return q
    div = diversity_value(subset, inst)
    if isinstance(div, InfiniteDiversity):
        return math.inf
    return q + inst.lam * div


def _column_entropy(col: np.ndarray) -> float:
    _, counts = np.unique(col, return_counts=True)
    p = counts / col.size
    return float(-(p * np.log(p)).sum())


def _joint_entropy(a: np.ndarray, b: np.ndarray) -> float:
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    pair = ia.astype(np.int64) * (int(ib.max()) + 1) + ib.astype(np.int64)
    return _column_entropy(pair)


def normalized_mi_from_data(
    features: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, DistanceMatrix]:
    """Plug-in normalized mutual information and the induced feature metric.

    ``features`` is samples-by-features, ``labels`` samples-by-labels, both
    integer-valued. Returns the features-by-labels score matrix (entries in
    [0, 1], zero when either marginal entropy vanishes) and the pairwise
    feature distance ``1 - I/H(joint)`` (zero on the diagonal and when the
    joint entropy vanishes). Entropies use natural log; both outputs are
    base-invariant ratios.
    """
    features = np.asarray(features)
    labels = np.asarray(labels)
    if features.ndim != 2 or labels.ndim != 2:
        raise ValueError("features and labels must be two-dimensional (samples by columns)")
    if features.shape[0] != labels.shape[0]:
        raise ValueError(
            f"features have {features.shape[0]} samples but labels have {labels.shape[0]}"
        )
    if features.shape[0] < 1:
        raise ValueError("at least one sample is required")
    m, n = features.shape
    n_labels = labels.shape[1]

    h_feat = np.array([_column_entropy(features[:, i]) for i in range(n)])
    h_lab = np.array([_column_entropy(labels[:, j]) for j in range(n_labels)])

    mi = np.zeros((n, n_labels))
    for i in range(n):
        for j in range(n_labels):
            if h_feat[i] <= 0.0 or h_lab[j] <= 0.0:
                continue
            info = h_feat[i] + h_lab[j] - _joint_entropy(features[:, i], labels[:, j])
            mi[i, j] = info / math.sqrt(h_feat[i] * h_lab[j])
    mi = np.clip(mi, 0.0, 1.0)

    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            h_joint = _joint_entropy(features[:, i], features[:, j])
            if h_joint <= 0.0:
                continue
            info = h_feat[i] + h_feat[j] - h_joint
            dist[i, j] = dist[j, i] = 1.0 - info / h_joint
    dist = np.clip(dist, 0.0, None)
    dist = (dist + dist.T) / 2.0
    return mi, DistanceMatrix(dist)
