"""Brute-force ground truth for small instances and guarantee checkers.

The enumeration guard (n <= 20) keeps the feasible family small enough to
scan exhaustively; it is enforced, not advisory.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from .algorithms import RunResult
from .constraints import PartitionConstraint, UniformConstraint
from .core import DistanceMatrix, Instance, Subset
from .objectives import ModularQuality, QualityOracle, objective

BRUTE_FORCE_MAX_N = 20
RATIO_TOL = 1e-9


@dataclass(frozen=True)
class OptResult:
    """Exact optimum of the original problem over the feasible family."""

    opt_value: float
    opt_subset: Subset
    enumerated: int


def _feasible_members(inst: Instance) -> Iterator[tuple[int, ...]]:
    """All final-feasible member tuples, ascending lexicographic order."""
    items = range(inst.n)
    c = inst.constraint
    if isinstance(c, UniformConstraint):
        sizes = (c.k,) if c.exact else range(c.k + 1)
        for size in sizes:
            yield from itertools.combinations(items, size)
        return
    # Partition matroid: per-part choices of at most the cap, combined.
    per_part: list[list[tuple[int, ...]]] = []
    for part, cap in zip(c.parts, c.caps):
        choices: list[tuple[int, ...]] = []
        for size in range(min(len(part), cap) + 1):
            choices.extend(itertools.combinations(sorted(part), size))
        per_part.append(choices)
    for combo in itertools.product(*per_part):
        yield tuple(sorted(itertools.chain.from_iterable(combo)))


def brute_force_opt(inst: Instance, *, reverse: bool = False) -> OptResult:
    """Exact maximum of the combined objective over the feasible family.

    ``reverse`` scans the same family backwards; both orders must agree on the
    value, which guards the enumeration itself against iteration bugs.
    """
    if inst.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force is guarded at n <= {BRUTE_FORCE_MAX_N}, got n={inst.n}")
    family = list(_feasible_members(inst))
    if reverse:
        family.reverse()
    best_val = -math.inf
    best_members: Optional[tuple[int, ...]] = None
    for members in family:
        val = objective(Subset.from_items(inst.n, members), inst)
        if val > best_val:
            best_val = val
            best_members = members
    if best_members is None:
        # Only possible for an empty family, which the constraints exclude.
        raise ValueError("no feasible subset to enumerate")
    return OptResult(best_val, Subset.from_items(inst.n, best_members), len(family))


@dataclass(frozen=True)
class RatioReport:
    passed: bool
    achieved: float
    opt_value: float


def verify_ratio(result: Union[RunResult, float], inst: Instance, ratio: float) -> RatioReport:
    """Check an achieved objective against a guaranteed fraction of the optimum.

    A zero optimum forces a zero achieved objective (both are nonnegative), so
    the achieved ratio is taken as 1 there, the only division-free reading.
    """
    value = result.objective if isinstance(result, RunResult) else float(result)
    opt = brute_force_opt(inst).opt_value
    achieved = 1.0 if opt == 0.0 else value / opt
    return RatioReport(passed=achieved >= ratio - RATIO_TOL, achieved=achieved, opt_value=opt)


@dataclass(frozen=True)
class SubmodularityReport:
    checked: int
    violations: int
    max_violation: float


def check_submodular(
    oracle: QualityOracle,
    n: int,
    trials: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> SubmodularityReport:
    """Count diminishing-returns violations: the gain of one item at a set
    must not grow when the set grows. Exhaustive over all nested pairs when
    ``trials`` is None (guarded at n <= 16), otherwise sampled."""
    tol = 1e-12
    checked = 0
    violations = 0
    max_violation = 0.0

    def probe(x_items: tuple[int, ...], y_items: tuple[int, ...], v: int) -> None:
        nonlocal checked, violations, max_violation
        x = Subset.from_items(n, x_items)
        y = Subset.from_items(n, y_items)
        gap = oracle.marginal(y, v) - oracle.marginal(x, v)
        checked += 1
        if gap > tol:
            violations += 1
            max_violation = max(max_violation, gap)

    if trials is None:
        if n > 16:
            raise ValueError("exhaustive mode is guarded at n <= 16")
        for y_items in _powerset(range(n)):
            y_set = set(y_items)
            for x_items in _powerset(y_items):
                for v in range(n):
                    if v not in y_set:
                        probe(x_items, y_items, v)
        return SubmodularityReport(checked, violations, max_violation)

    if rng is None:
        rng = np.random.default_rng(0)
    for _ in range(trials):
        mask_y = rng.random(n) < rng.random()
        outside = np.flatnonzero(~mask_y)
        if outside.size == 0:
            continue
        v = int(outside[rng.integers(outside.size)])
        mask_x = mask_y & (rng.random(n) < rng.random())
        probe(tuple(np.flatnonzero(mask_x)), tuple(np.flatnonzero(mask_y)), v)
    return SubmodularityReport(checked, violations, max_violation)


def _powerset(items) -> Iterator[tuple[int, ...]]:
    items = list(items)
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


def hard_min_instance(n: int) -> Instance:
    """Min-diversity instance with a deceptive high-value small solution.

    Half the items carry unit weight (including item 0, the hub), the rest
    zero. The hub sits at distance n/9 from everything, all other pairs at
    distance 1, which is a metric. Selecting the hub plus one unit-weight item
    scores 2 + n/9, while the optimum n/2 + 1 needs all unit-weight items.
    Requires n divisible by 18 so that n/9 and k = n/2 are integers.
    """
    if n <= 0 or n % 18 != 0:
        raise ValueError("ground set size must be a positive multiple of 18")
    half = n // 2
    weights = np.zeros(n)
    weights[:half] = 1.0
    values = np.ones((n, n))
    np.fill_diagonal(values, 0.0)
    hub_distance = n / 9.0
    values[0, 1:] = hub_distance
    values[1:, 0] = hub_distance
    return Instance(
        n=n,
        quality=ModularQuality(weights),
        distance=DistanceMatrix(values),
        lam=1.0,
        constraint=UniformConstraint(half, exact=True),
        diversity="min",
    )
