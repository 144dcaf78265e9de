"""Feasibility oracles for uniform (cardinality) and partition matroids.

Only these two matroid families are concrete; algorithms touch nothing beyond
``is_independent`` / ``rank`` / ``extend_to_basis`` / ``feasible_swaps``, so
further families can slot in without algorithm changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .core import Subset


@dataclass(frozen=True)
class UniformConstraint:
    """All subsets of size at most k. With ``exact=True`` the original problem
    additionally requires the final solution to have size exactly k (independence
    itself stays hereditary)."""

    k: int
    exact: bool = False

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError("cardinality bound must be nonnegative")


@dataclass(frozen=True)
class PartitionConstraint:
    """Per-part cardinality caps over a partition of the ground set."""

    parts: tuple[tuple[int, ...], ...]
    caps: tuple[int, ...]
    part_of: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.parts) != len(self.caps):
            raise ValueError(f"{len(self.parts)} parts but {len(self.caps)} caps")
        if any(c < 0 for c in self.caps):
            raise ValueError("caps must be nonnegative")
        n = sum(len(p) for p in self.parts)
        part_of = np.full(n, -1, dtype=np.int64)
        for pi, part in enumerate(self.parts):
            for item in part:
                if not 0 <= item < n:
                    raise ValueError(f"item {item} outside ground set of size {n}")
                if part_of[item] != -1:
                    raise ValueError(f"item {item} appears in more than one part")
                part_of[item] = pi
        if np.any(part_of == -1):
            raise ValueError("parts do not cover the ground set")
        part_of.setflags(write=False)
        object.__setattr__(self, "part_of", part_of)

    @property
    def n(self) -> int:
        return int(self.part_of.size)


Constraint = Union[UniformConstraint, PartitionConstraint]


def is_independent(subset: Subset, c: Constraint) -> bool:
    if isinstance(c, UniformConstraint):
        return len(subset) <= c.k
    counts = np.bincount(c.part_of[subset.members()], minlength=len(c.parts))
    return bool(np.all(counts <= np.asarray(c.caps)))


def is_final_feasible(subset: Subset, c: Constraint) -> bool:
    """Feasibility for the original problem: independence, plus the exact-size
    requirement when the constraint carries one."""
    if isinstance(c, UniformConstraint) and c.exact:
        return len(subset) == c.k
    return is_independent(subset, c)


def rank(c: Constraint) -> int:
    if isinstance(c, UniformConstraint):
        return c.k
    return int(sum(min(len(p), cap) for p, cap in zip(c.parts, c.caps)))


def extend_to_basis(subset: Subset, c: Constraint, order: Optional[Sequence[int]] = None) -> Subset:
    """Grow an independent set to a basis by scanning items in the given order
    (ascending index by default) and keeping every addition independent."""
    if not is_independent(subset, c):
        raise ValueError("cannot extend a dependent set to a basis")
    out = subset.copy()
    scan = range(out.n) if order is None else order
    if isinstance(c, UniformConstraint):
        for item in scan:
            if len(out) >= c.k:
                break
            out.add(item)
        return out
    counts = np.bincount(c.part_of[out.members()], minlength=len(c.parts))
    caps = np.asarray(c.caps)
    for item in scan:
        if item in out:
            continue
        pi = int(c.part_of[item])
        if counts[pi] < caps[pi]:
            out.add(item)
            counts[pi] += 1
    return out


def feasible_swaps(subset: Subset, c: Constraint) -> Iterator[tuple[int, int]]:
    """Yield exactly the (out, in) exchanges of a basis that stay independent.

    Uniform: every (member, nonmember) pair. Partition: the incoming item's
    part must have slack once the outgoing item is removed.
    """
    if len(subset) != rank(c):
        raise ValueError("swap enumeration requires a basis")
    members = subset.members()
    outside = subset.nonmembers()
    if isinstance(c, UniformConstraint):
        for v in members:
            for u in outside:
                yield int(v), int(u)
        return
    counts = np.bincount(c.part_of[members], minlength=len(c.parts))
    caps = np.asarray(c.caps)
    for v in members:
        pv = int(c.part_of[v])
        for u in outside:
            pu = int(c.part_of[u])
            used = counts[pu] - (1 if pu == pv else 0)
            if used < caps[pu]:
                yield int(v), int(u)
