"""Ground-set primitives: subsets, distance matrices, problem instances, seeded RNG.

Items are dense indices ``0..n-1``. Optional string names in input files map to
indices in file order. Instances and distance matrices are immutable after
load and safe to share across concurrent runs; ``Subset`` and ``RngStream``
are single-owner mutable state.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from .constraints import Constraint
    from .objectives import QualityOracle

# Looser input is rejected, not repaired: silent repair would mask data bugs.
SYMMETRY_TOL = 1e-12
METRIC_TOL = 1e-12

DIVERSITY_KINDS = ("sum", "min", "mst")


class InstanceError(ValueError):
    """Malformed or inconsistent problem data (schema, dimensions, domains)."""


class Subset:
    """Fixed-capacity bit vector over the ground set with cached cardinality.

    ``add`` of a present item and ``discard`` of an absent item are no-ops.
    Indices outside ``[0, n)`` raise ``IndexError``.
    """

    __slots__ = ("n", "bits", "_card")

    def __init__(self, n: int, bits: Optional[np.ndarray] = None, *, _copy: bool = True):
        if n < 0:
            raise ValueError("ground set size must be nonnegative")
        self.n = n
        if bits is None:
            self.bits = np.zeros(n, dtype=bool)
        else:
            arr = np.asarray(bits, dtype=bool)
            if arr.shape != (n,):
                raise ValueError(f"bit vector must have length {n}, got {arr.shape}")
            self.bits = arr.copy() if _copy else arr
        self._card = int(np.count_nonzero(self.bits))

    @classmethod
    def empty(cls, n: int) -> "Subset":
        return cls(n)

    @classmethod
    def full(cls, n: int) -> "Subset":
        return cls(n, np.ones(n, dtype=bool), _copy=False)

    @classmethod
    def from_items(cls, n: int, items: Iterable[int]) -> "Subset":
        s = cls(n)
        for i in items:
            s.add(i)
        return s

    @classmethod
    def from_bits(cls, bits: np.ndarray, *, copy: bool = True) -> "Subset":
        return cls(len(bits), bits, _copy=copy)

    def _check(self, item: int) -> None:
        if not 0 <= item < self.n:
            raise IndexError(f"item {item} outside ground set of size {self.n}")

    def add(self, item: int) -> None:
        self._check(item)
        if not self.bits[item]:
            self.bits[item] = True
            self._card += 1

    def discard(self, item: int) -> None:
        self._check(item)
        if self.bits[item]:
            self.bits[item] = False
            self._card -= 1

    def __contains__(self, item: int) -> bool:
        self._check(item)
        return bool(self.bits[item])

    @property
    def cardinality(self) -> int:
        return self._card

    def __len__(self) -> int:
        return self._card

    def members(self) -> np.ndarray:
        """Member indices in ascending order."""
        return np.flatnonzero(self.bits)

    def nonmembers(self) -> np.ndarray:
        """Complement indices in ascending order."""
        return np.flatnonzero(~self.bits)

    def copy(self) -> "Subset":
        return Subset(self.n, self.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subset):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None  # mutable

    def __repr__(self) -> str:
        return f"Subset(n={self.n}, members={self.members().tolist()})"


@dataclass(frozen=True)
class MetricReport:
    """Outcome of the triangle-inequality scan over all ordered triples."""

    metric: bool
    alpha: float
    witness: Optional[tuple[int, int, int]]


def _check_distance_values(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InstanceError(f"distance matrix must be square, got shape {values.shape}")
    if np.any(values < 0):
        raise InstanceError("distance matrix has negative entries")
    if np.any(np.abs(np.diagonal(values)) > SYMMETRY_TOL):
        raise InstanceError("distance matrix has nonzero diagonal")
    if np.max(np.abs(values - values.T), initial=0.0) > SYMMETRY_TOL:
        raise InstanceError(f"distance matrix asymmetric beyond {SYMMETRY_TOL}")
    return values


def validate_metric(values: np.ndarray) -> MetricReport:
    """Scan all ordered triples (u, v, w) for the relaxed triangle inequality.

    Returns the smallest ``alpha >= 1`` with ``alpha * (d(u,v) + d(v,w)) >= d(u,w)``
    for every triple (0/0 treated as 1), and a maximizing triple as witness when
    the matrix is not a metric (``alpha > 1``).
    """
    values = _check_distance_values(values)
    n = values.shape[0]
    alpha = 1.0
    witness: Optional[tuple[int, int, int]] = None
    # One pass per middle item v: ratio[u, w] = d(u, w) / (d(u, v) + d(v, w)).
    for v in range(n):
        denom = values[:, v][:, None] + values[v, :][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(denom > 0, values / np.where(denom > 0, denom, 1.0), np.where(values > 0, np.inf, 1.0))
        idx = int(np.argmax(ratio))
        u, w = divmod(idx, n)
        r = float(ratio[u, w])
        if r > alpha:
            alpha = r
            witness = (u, v, w)
    metric = alpha <= 1.0 + METRIC_TOL
    return MetricReport(metric=metric, alpha=max(alpha, 1.0), witness=None if metric else witness)


class DistanceMatrix:
    """Symmetric nonnegative distances with zero diagonal.

    The relaxed-triangle parameter ``alpha`` is computed eagerly on
    construction (O(n^3), cheap at the instance sizes this library targets),
    so metric checks downstream are free.
    """

    __slots__ = ("values", "n", "alpha", "metric", "witness")

    def __init__(self, values: np.ndarray):
        report = validate_metric(values)
        self.values = np.asarray(values, dtype=float)
        self.values.setflags(write=False)
        self.n = self.values.shape[0]
        self.alpha = report.alpha
        self.metric = report.metric
        self.witness = report.witness

    def __repr__(self) -> str:
        return f"DistanceMatrix(n={self.n}, alpha={self.alpha:.6g}, metric={self.metric})"


def stable_stream_id(*parts: object) -> int:
    """Stable 64-bit stream id from arbitrary tags (not Python's seeded hash)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id; identical pairs give identical draw sequences.

    One master seed per experiment; each (trial, algorithm) cell derives an
    independent stream via ``derived``. Cross-version bit-exactness is not
    promised, determinism within one build is.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream]))

    def derived(self, *tags: object) -> "RngStream":
        return RngStream(self.seed, stable_stream_id(self.stream, *tags))


@dataclass
class Instance:
    """One optimization problem: quality oracle, distances, tradeoff, constraint."""

    n: int
    quality: "QualityOracle"
    distance: DistanceMatrix
    lam: float
    constraint: "Constraint"
    diversity: str
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        check_instance(self)


def check_instance(inst: Instance) -> None:
    from .constraints import PartitionConstraint, UniformConstraint

    if inst.diversity not in DIVERSITY_KINDS:
        raise InstanceError(f"unknown diversity kind {inst.diversity!r}")
    if inst.lam < 0:
        raise InstanceError("tradeoff parameter must be nonnegative")
    if inst.quality.n != inst.n:
        raise InstanceError(f"quality oracle covers {inst.quality.n} items, instance has {inst.n}")
    if inst.distance.n != inst.n:
        raise InstanceError(f"distance matrix covers {inst.distance.n} items, instance has {inst.n}")
    if inst.names is not None and len(inst.names) != inst.n:
        raise InstanceError("item name list does not match ground set size")
    c = inst.constraint
    if isinstance(c, UniformConstraint):
        if not 0 <= c.k <= inst.n:
            raise InstanceError(f"cardinality bound k={c.k} outside [0, {inst.n}]")
    elif isinstance(c, PartitionConstraint):
        if c.n != inst.n:
            raise InstanceError(f"partition covers {c.n} items, instance has {inst.n}")
    else:
        raise InstanceError(f"unknown constraint type {type(c).__name__}")
    if inst.diversity in ("min", "mst"):
        # These diversities are not monotone nondecreasing, so the original
        # problem fixes the subset size exactly.
        if not isinstance(c, UniformConstraint) or not c.exact:
            raise InstanceError(f"{inst.diversity}-diversity requires an exact-size cardinality constraint")
        if c.k < 2:
            raise InstanceError(f"{inst.diversity}-diversity requires k >= 2")


def instance_to_document(inst: Instance) -> dict:
    """Plain-JSON document for an instance (see README for the schema)."""
    from .constraints import PartitionConstraint, UniformConstraint
    from .objectives import ModularQuality, TopPMIQuality

    q = inst.quality
    if isinstance(q, ModularQuality):
        quality = {"kind": "modular", "weights": [float(w) for w in q.weights]}
    elif isinstance(q, TopPMIQuality):
        quality = {"kind": "top_p_mi", "p": q.p, "mi": [[float(x) for x in row] for row in q.mi]}
    else:
        raise InstanceError(f"cannot serialize quality oracle of type {type(q).__name__}")

    c = inst.constraint
    if isinstance(c, UniformConstraint):
        constraint = {"kind": "cardinality", "k": c.k, "mode": "exact" if c.exact else "at_most"}
    else:
        assert isinstance(c, PartitionConstraint)
        constraint = {
            "kind": "partition",
            "parts": [list(p) for p in c.parts],
            "caps": list(c.caps),
        }

    doc = {
        "n": inst.n,
        "lambda": float(inst.lam),
        "diversity": inst.diversity,
        "quality": quality,
        "distance": {"kind": "dense", "values": [float(x) for x in inst.distance.values.ravel()]},
        "constraint": constraint,
    }
    if inst.names is not None:
        doc["names"] = list(inst.names)
    return doc


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceError(msg)


def instance_from_document(doc: dict) -> Instance:
    from .constraints import PartitionConstraint, UniformConstraint
    from .objectives import ModularQuality, TopPMIQuality

    _require(isinstance(doc, dict), "instance document must be an object")
    for key in ("n", "lambda", "diversity", "quality", "distance", "constraint"):
        _require(key in doc, f"instance document missing field {key!r}")
    n = doc["n"]
    _require(isinstance(n, int) and n >= 0, "field 'n' must be a nonnegative integer")
    lam = doc["lambda"]
    _require(isinstance(lam, (int, float)) and not isinstance(lam, bool), "field 'lambda' must be a real")

    qdoc = doc["quality"]
    _require(isinstance(qdoc, dict) and "kind" in qdoc, "quality block must carry a 'kind'")
    if qdoc["kind"] == "modular":
        weights = qdoc.get("weights")
        _require(isinstance(weights, list), "modular quality needs a 'weights' list")
        _require(len(weights) == n, f"quality weights have length {len(weights)}, expected n={n}")
        quality: "QualityOracle" = ModularQuality(np.asarray(weights, dtype=float))
    elif qdoc["kind"] == "top_p_mi":
        _require("p" in qdoc and "mi" in qdoc, "top_p_mi quality needs 'p' and 'mi'")
        mi = qdoc["mi"]
        _require(isinstance(mi, list) and len(mi) == n, f"'mi' must have n={n} rows")
        quality = TopPMIQuality(np.asarray(mi, dtype=float), int(qdoc["p"]))
    else:
        raise InstanceError(f"unknown quality kind {qdoc['kind']!r}")

    ddoc = doc["distance"]
    _require(isinstance(ddoc, dict) and ddoc.get("kind") == "dense", "distance block must have kind 'dense'")
    values = ddoc.get("values")
    _require(isinstance(values, list), "dense distance block needs a 'values' list")
    _require(len(values) == n * n, f"distance block has {len(values)} values, expected n*n={n * n}")
    distance = DistanceMatrix(np.asarray(values, dtype=float).reshape(n, n))

    cdoc = doc["constraint"]
    _require(isinstance(cdoc, dict) and "kind" in cdoc, "constraint block must carry a 'kind'")
    if cdoc["kind"] == "cardinality":
        _require("k" in cdoc, "cardinality constraint needs 'k'")
        mode = cdoc.get("mode", "at_most")
        _require(mode in ("at_most", "exact"), f"unknown cardinality mode {mode!r}")
        constraint: "Constraint" = UniformConstraint(int(cdoc["k"]), exact=(mode == "exact"))
    elif cdoc["kind"] == "partition":
        _require("parts" in cdoc and "caps" in cdoc, "partition constraint needs 'parts' and 'caps'")
        try:
            constraint = PartitionConstraint(
                tuple(tuple(int(i) for i in part) for part in cdoc["parts"]),
                tuple(int(c) for c in cdoc["caps"]),
            )
        except ValueError as exc:
            raise InstanceError(str(exc)) from exc
    else:
        raise InstanceError(f"unknown constraint kind {cdoc['kind']!r}")

    names = doc.get("names")
    if names is not None:
        _require(isinstance(names, list) and all(isinstance(s, str) for s in names), "'names' must be a string list")
        names = tuple(names)

    return Instance(
        n=n,
        quality=quality,
        distance=distance,
        lam=float(lam),
        constraint=constraint,
        diversity=doc["diversity"],
        names=names,
    )


def dumps_instance(inst: Instance) -> str:
    """Canonical serialization; byte-identical for structurally equal instances."""
    return json.dumps(instance_to_document(inst), sort_keys=True, separators=(",", ":")) + "\n"


def save_instance(inst: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


def load_instance(path: Union[str, Path]) -> Instance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"cannot read instance file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance file {path} is not valid JSON: {exc}") from exc
    return instance_from_document(doc)
