"""Bi-objective reformulations driven by the evolutionary optimizer.

Each variant fixes a pair of objectives to maximize, a feasibility filter for
offspring, and a rule for extracting (and, where needed, repairing) the final
solution. Wherever the underlying problem leaves an ordering free, ascending
item index is used, so runs are deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .constraints import UniformConstraint, is_final_feasible, is_independent
from .core import Instance, InstanceError, Subset
from .objectives import (
    INFINITE_DIVERSITY,
    DiversityValue,
    EvaluationCounter,
    InfiniteDiversity,
    diversity_value,
    min_diversity,
    objective,
    permutation_mst_proxy,
    sum_diversity,
)

F1Value = Union[float, InfiniteDiversity]


@dataclass(frozen=True)
class BiObjectiveValue:
    """A point in objective space; f1 may be the infinite sentinel."""

    f1: F1Value
    f2: float


def _f1_ge(a: F1Value, b: F1Value) -> bool:
    if isinstance(a, InfiniteDiversity):
        return True
    if isinstance(b, InfiniteDiversity):
        return False
    return a >= b


def _f1_eq(a: F1Value, b: F1Value) -> bool:
    if isinstance(a, InfiniteDiversity) or isinstance(b, InfiniteDiversity):
        return isinstance(a, InfiniteDiversity) and isinstance(b, InfiniteDiversity)
    return a == b


def weakly_dominates(a: BiObjectiveValue, b: BiObjectiveValue) -> bool:
    return _f1_ge(a.f1, b.f1) and a.f2 >= b.f2


def strictly_dominates(a: BiObjectiveValue, b: BiObjectiveValue) -> bool:
    return weakly_dominates(a, b) and (not _f1_eq(a.f1, b.f1) or a.f2 > b.f2)


@dataclass(frozen=True)
class DominationResult:
    weak: bool
    strict: bool
    incomparable: bool


def dominates(a: BiObjectiveValue, b: BiObjectiveValue) -> DominationResult:
    weak = weakly_dominates(a, b)
    return DominationResult(
        weak=weak,
        strict=weak and strictly_dominates(a, b),
        incomparable=not weak and not weakly_dominates(b, a),
    )


class Formulation(enum.Enum):
    """Which (f1, f2) pair the evolutionary optimizer maximizes."""

    SCALED_CARDINALITY_SUM = "scaled_cardinality_sum"
    PLAIN_CARDINALITY_SUM = "plain_cardinality_sum"
    MIN_QUALITY_PHASE = "min_quality_phase"
    MIN_DIVERSITY_PHASE = "min_diversity_phase"
    MST_PERMUTATION = "mst_permutation"
    MATROID_SUM = "matroid_sum"


def needs_permutation(form: Formulation) -> bool:
    return form is Formulation.MST_PERMUTATION


@dataclass(frozen=True)
class Individual:
    """A candidate solution with its objective pair and cached value parts.

    ``perm`` is present only for the permutation-based variant and always
    orders exactly the members of ``subset``.
    """

    subset: Subset
    value: BiObjectiveValue
    quality: float
    diversity: DiversityValue
    perm: Optional[tuple[int, ...]] = None


def uniform_k(inst: Instance) -> int:
    c = inst.constraint
    if not isinstance(c, UniformConstraint):
        raise InstanceError("this formulation requires a cardinality constraint")
    return c.k


def _combined_f1(quality: float, lam: float, div: DiversityValue) -> F1Value:
    """Quality plus weighted diversity; the infinite diversity sentinel of
    undersized min-diversity sets swallows the finite part whenever the
    tradeoff is positive."""
    if lam == 0.0:
        return quality
    if isinstance(div, InfiniteDiversity):
        return INFINITE_DIVERSITY
    return quality + lam * div


def make_individual(
    form: Formulation,
    subset: Subset,
    inst: Instance,
    perm: Optional[tuple[int, ...]] = None,
    counter: Optional[EvaluationCounter] = None,
) -> Individual:
    """Evaluate a subset under a formulation. Charges 1 when a counter is given."""
    if counter is not None:
        counter.add(1)
    size = len(subset)
    q = inst.quality.value(subset)

    if form is Formulation.SCALED_CARDINALITY_SUM:
        k = uniform_k(inst)
        div = diversity_value(subset, inst)
        f1 = _combined_f1(0.5 * (1.0 + size / k) * q, inst.lam, div)
        return Individual(subset, BiObjectiveValue(f1, -float(size)), q, div)

    if form is Formulation.PLAIN_CARDINALITY_SUM:
        uniform_k(inst)
        div = diversity_value(subset, inst)
        f1 = _combined_f1(q, inst.lam, div)
        return Individual(subset, BiObjectiveValue(f1, -float(size)), q, div)

    if form is Formulation.MIN_QUALITY_PHASE:
        uniform_k(inst)
        return Individual(subset, BiObjectiveValue(q, -float(size)), q, min_diversity(subset, inst.distance))

    if form is Formulation.MIN_DIVERSITY_PHASE:
        uniform_k(inst)
        div = min_diversity(subset, inst.distance)
        f1: F1Value = div if isinstance(div, InfiniteDiversity) else float(div)
        return Individual(subset, BiObjectiveValue(f1, float(size)), q, div)

    if form is Formulation.MST_PERMUTATION:
        uniform_k(inst)
        if perm is None:
            raise ValueError("the permutation variant needs an item ordering")
        if sorted(perm) != subset.members().tolist():
            raise ValueError("ordering does not match the subset's members")
        proxy = permutation_mst_proxy(perm, inst.distance)
        f1 = q + inst.lam * proxy
        return Individual(subset, BiObjectiveValue(f1, -float(size)), q, proxy, perm=tuple(perm))

    assert form is Formulation.MATROID_SUM
    div = diversity_value(subset, inst)
    return Individual(subset, BiObjectiveValue(_combined_f1(q, inst.lam, div), float(size)), q, div)


def evaluate(
    form: Formulation,
    subset: Subset,
    inst: Instance,
    perm: Optional[tuple[int, ...]] = None,
    counter: Optional[EvaluationCounter] = None,
) -> BiObjectiveValue:
    return make_individual(form, subset, inst, perm=perm, counter=counter).value


def offspring_feasible(form: Formulation, subset: Subset, inst: Instance) -> bool:
    """Filter applied during optimization; failing offspring are discarded."""
    if form is Formulation.MATROID_SUM:
        return is_independent(subset, inst.constraint)
    return len(subset) <= uniform_k(inst)


def mutate_permutation(parent_perm: tuple[int, ...], offspring: Subset) -> tuple[int, ...]:
    """Ordering for a mutated solution: survivors keep their relative order,
    removed items are dropped, added items are appended in ascending index."""
    bits = offspring.bits
    kept = [u for u in parent_perm if bits[u]]
    old = set(parent_perm)
    added = [int(u) for u in offspring.members() if int(u) not in old]
    return tuple(kept) + tuple(added)


def _pad_ascending(subset: Subset, k: int) -> tuple[Subset, list[int]]:
    """Pad to size k with the lowest-index unselected items."""
    out = subset.copy()
    appended: list[int] = []
    for u in out.nonmembers():
        if len(out) >= k:
            break
        out.add(int(u))
        appended.append(int(u))
    return out, appended


@dataclass(frozen=True)
class Extraction:
    """Final solution pulled (and possibly repaired) from a population."""

    subset: Subset
    objective: float
    feasible: bool
    perm: Optional[tuple[int, ...]] = None


def _report_objective(subset: Subset, inst: Instance) -> float:
    if inst.diversity == "min" and len(subset) <= 1:
        return 0.0  # no pairwise spread to report; never final-feasible anyway
    return objective(subset, inst)


def extract_final(form: Formulation, individuals: Iterable[Individual], inst: Instance) -> Extraction:
    """Best feasible solution for the original problem, per variant.

    Ties and 'arbitrary' paddings resolve to ascending index. When the
    population holds no final-feasible solution, the largest one is returned
    flagged infeasible so that mid-run traces can still be recorded.
    """
    inds = sorted(individuals, key=lambda ind: len(ind.subset))
    if not inds:
        raise ValueError("population is empty")

    if form in (
        Formulation.SCALED_CARDINALITY_SUM,
        Formulation.PLAIN_CARDINALITY_SUM,
        Formulation.MATROID_SUM,
    ):
        best: Optional[Extraction] = None
        for ind in inds:
            if not is_final_feasible(ind.subset, inst.constraint):
                continue
            obj = _report_objective(ind.subset, inst)
            if best is None or obj > best.objective:
                best = Extraction(ind.subset.copy(), obj, True)
        if best is not None:
            return best
        largest = inds[-1]
        return Extraction(largest.subset.copy(), _report_objective(largest.subset, inst), False)

    if form is Formulation.MIN_QUALITY_PHASE:
        largest = inds[-1]
        padded, _ = _pad_ascending(largest.subset, uniform_k(inst))
        return Extraction(padded, _report_objective(padded, inst), is_final_feasible(padded, inst.constraint))

    if form is Formulation.MIN_DIVERSITY_PHASE:
        k = uniform_k(inst)
        for ind in inds:
            if len(ind.subset) == k:
                return Extraction(ind.subset.copy(), _report_objective(ind.subset, inst), True)
        largest = inds[-1]
        return Extraction(largest.subset.copy(), _report_objective(largest.subset, inst), False)

    assert form is Formulation.MST_PERMUTATION
    largest = inds[-1]
    padded, appended = _pad_ascending(largest.subset, uniform_k(inst))
    perm = (largest.perm or ()) + tuple(appended)
    feasible = is_final_feasible(padded, inst.constraint)
    return Extraction(padded, _report_objective(padded, inst), feasible, perm=perm)
