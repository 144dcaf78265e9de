"""The five optimizers: three greedy variants, swap local search, and a
Pareto-based evolutionary optimizer over the bi-objective reformulations.

Conventions shared by every optimizer:
  * argmax ties break to the lowest item index;
  * strict-improvement comparisons carry a 1e-12 relative guard against
    floating-point livelock;
  * traces hold (evaluations, best objective so far) and are nondecreasing in
    both coordinates; points appear only once a final-feasible solution exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from .constraints import (
    Constraint,
    UniformConstraint,
    extend_to_basis,
    feasible_swaps,
    is_final_feasible,
    is_independent,
    rank,
)
from .core import Instance, InstanceError, RngStream, Subset
from .formulations import (
    Formulation,
    Individual,
    extract_final,
    make_individual,
    mutate_permutation,
    needs_permutation,
    offspring_feasible,
    strictly_dominates,
    weakly_dominates,
)
from .objectives import (
    EvaluationCounter,
    InfiniteDiversity,
    ModularQuality,
    min_diversity,
    mst_diversity,
    objective,
    sum_diversity,
)

IMPROVE_TOL = 1e-12


def default_gsemo_iterations(n: int, k: int) -> int:
    """Library default: iteration budget sufficient for the 1/2-approximation
    guarantee of the scaled cardinality formulation."""
    return math.ceil(math.e * n * k**3 / 2)


def quality_phase_iterations(n: int, k: int) -> int:
    return math.ceil(math.e * n * k * (k + 1))


def diversity_phase_iterations(n: int, k: int) -> int:
    return math.ceil(math.e * n * k * k)


def greedy_scan_evaluations(n: int, k: int) -> int:
    """Closed-form cost of k greedy steps, step i scanning n - i candidates."""
    return k * n - k * (k - 1) // 2


@dataclass(frozen=True)
class ZeroStart:
    """Start the evolutionary optimizer from the empty set."""


@dataclass(frozen=True)
class ColdStart:
    """Start local search from the best feasible pair, extended to a basis."""


@dataclass(frozen=True)
class WarmStart:
    """Start from a previously found solution."""

    subset: Subset


ZERO_START = ZeroStart()
COLD_START = ColdStart()


@dataclass
class RunConfig:
    """Budget, randomness, and tracing knobs for one optimizer run.

    Exactly one of ``iterations`` / ``evaluations`` must be set. The
    evolutionary optimizer charges one evaluation per iteration, so the two
    budgets coincide there. ``stop_objective`` ends a run early once the best
    final-feasible objective reaches the threshold (checked at trace points).
    """

    rng: RngStream
    iterations: Optional[int] = None
    evaluations: Optional[int] = None
    trace_stride: Optional[int] = None
    stop_objective: Optional[float] = None
    validate_population: bool = False

    def budget(self) -> int:
        if (self.iterations is None) == (self.evaluations is None):
            raise ValueError("exactly one of iterations/evaluations must be set")
        budget = self.iterations if self.iterations is not None else self.evaluations
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        return int(budget)


@dataclass
class RunResult:
    """Best solution found, its objective, and the evaluation accounting."""

    best: Subset
    objective: float
    evaluations: int
    trace: list[tuple[int, float]]
    feasible: bool = True
    perm: Optional[tuple[int, ...]] = None


class Population:
    """Mutually incomparable individuals, at most one per f2 value.

    With two objectives, the second objective (a signed size) indexes the
    population, which therefore never exceeds one individual per attainable
    size.
    """

    __slots__ = ("slots",)

    def __init__(self) -> None:
        self.slots: dict[int, Individual] = {}

    def __len__(self) -> int:
        return len(self.slots)

    def members(self) -> list[Individual]:
        return [self.slots[key] for key in sorted(self.slots)]

    def random_member(self, rng: np.random.Generator) -> Individual:
        keys = sorted(self.slots)
        return self.slots[keys[int(rng.integers(len(keys)))]]

    def update(self, candidate: Individual) -> bool:
        """Insert unless strictly dominated; evict the weakly dominated."""
        current = list(self.slots.items())
        for _, ind in current:
            if strictly_dominates(ind.value, candidate.value):
                return False
        for key, ind in current:
            if weakly_dominates(candidate.value, ind.value):
                del self.slots[key]
        self.slots[int(candidate.value.f2)] = candidate
        return True

    def check_invariants(self, form: Formulation, inst: Instance) -> None:
        inds = self.members()
        for i, a in enumerate(inds):
            if int(a.value.f2) != [k for k in sorted(self.slots)][i]:
                raise AssertionError("population key inconsistent with f2")
            if not offspring_feasible(form, a.subset, inst):
                raise AssertionError("population holds an infeasible individual")
            for b in inds[i + 1 :]:
                if weakly_dominates(a.value, b.value) or weakly_dominates(b.value, a.value):
                    raise AssertionError("population holds comparable individuals")


def _masked_argmax(scores: np.ndarray, forbidden: np.ndarray) -> int:
    masked = np.where(forbidden, -np.inf, scores)
    return int(np.argmax(masked))


def greedy_sum(inst: Instance) -> RunResult:
    """Non-oblivious greedy for the pairwise-sum diversity: each step adds the
    item maximizing half the quality gain plus the weighted distance mass to
    the current set. Step i scans all n - i candidates and charges as many
    evaluations."""
    if inst.diversity != "sum":
        raise InstanceError("this greedy variant requires sum diversity")
    k = _uniform_k_checked(inst)
    n = inst.n
    counter = EvaluationCounter()
    subset = Subset.empty(n)
    d = inst.distance.values
    trace: list[tuple[int, float]] = []
    quality_val = 0.0
    div_val = 0.0
    prefix_feasible = not inst.constraint.exact
    for i in range(k):
        gains = 0.5 * inst.quality.marginals_all(subset)
        if inst.lam > 0 and len(subset) > 0:
            gains = gains + inst.lam * d[:, subset.members()].sum(axis=1)
        u = _masked_argmax(gains, subset.bits)
        counter.add(n - i)
        quality_val += inst.quality.marginal(subset, u)
        if len(subset) > 0:
            div_val += float(d[u, subset.members()].sum())
        subset.add(u)
        if prefix_feasible:
            trace.append((counter.count, quality_val + inst.lam * div_val))
    obj = quality_val + inst.lam * div_val
    if not prefix_feasible:
        trace.append((counter.count, obj))
    return RunResult(subset, obj, counter.count, trace)


def greedy_min(inst: Instance) -> RunResult:
    """Two parallel greedy chains for the min-distance diversity: one chases
    quality gains, the other farthest-point spread; the better chain under the
    true objective wins (quality chain on ties). The farthest-point chain's
    first pick is fixed to item 0, the lowest index, since no distances exist
    yet to compare."""
    if inst.diversity != "min":
        raise InstanceError("this greedy variant requires min diversity")
    k = _uniform_k_checked(inst)
    n = inst.n
    counter = EvaluationCounter()
    d = inst.distance.values
    x = Subset.empty(n)
    y = Subset.empty(n)
    for i in range(k):
        gains = inst.quality.marginals_all(x)
        u1 = _masked_argmax(gains, x.bits)
        counter.add(n - i)
        if i == 0:
            u2 = 0
        else:
            dists = d[:, y.members()].min(axis=1)
            u2 = _masked_argmax(dists, y.bits)
        counter.add(n - i)
        x.add(u1)
        y.add(u2)
    obj_x = objective(x, inst, counter)
    obj_y = objective(y, inst, counter)
    if obj_x >= obj_y:
        best, obj = x, obj_x
    else:
        best, obj = y, obj_y
    return RunResult(best, obj, counter.count, [(counter.count, obj)])


def greedy_mst(inst: Instance) -> RunResult:
    """Greedy for the spanning-tree diversity: each step adds the item
    maximizing quality gain plus weighted distance to the nearest selected
    item (taken as 0 for the empty set, so the first pick is pure quality)."""
    if inst.diversity != "mst":
        raise InstanceError("this greedy variant requires mst diversity")
    k = _uniform_k_checked(inst)
    n = inst.n
    counter = EvaluationCounter()
    d = inst.distance.values
    subset = Subset.empty(n)
    for i in range(k):
        gains = inst.quality.marginals_all(subset)
        if inst.lam > 0 and len(subset) > 0:
            gains = gains + inst.lam * d[:, subset.members()].min(axis=1)
        u = _masked_argmax(gains, subset.bits)
        counter.add(n - i)
        subset.add(u)
    obj = inst.quality.value(subset) + inst.lam * mst_diversity(subset, inst.distance)
    return RunResult(subset, obj, counter.count, [(counter.count, obj)])


def _uniform_k_checked(inst: Instance) -> int:
    c = inst.constraint
    if not isinstance(c, UniformConstraint):
        raise InstanceError("greedy variants require a cardinality constraint")
    if c.k > inst.n:
        raise InstanceError(f"cannot select k={c.k} items out of {inst.n}")
    return c.k


def _improves(candidate: float, incumbent: float, epsilon: float) -> bool:
    threshold = incumbent * (1.0 + epsilon)
    return candidate > threshold + IMPROVE_TOL * abs(threshold)


def _sum_objective(members: np.ndarray, inst: Instance) -> float:
    q = inst.quality.value(Subset.from_items(inst.n, members))
    if members.size <= 1 or inst.lam == 0.0:
        div = 0.0
    else:
        div = float(inst.distance.values[np.ix_(members, members)].sum()) / 2.0
    return q + inst.lam * div


def _two_swap_candidates(subset: Subset, c: Constraint) -> Iterator[tuple[tuple[int, int], tuple[int, int]]]:
    members = [int(v) for v in subset.members()]
    outside = [int(u) for u in subset.nonmembers()]
    for ai in range(len(members)):
        for bi in range(ai + 1, len(members)):
            for ci in range(len(outside)):
                for di in range(ci + 1, len(outside)):
                    yield (members[ai], members[bi]), (outside[ci], outside[di])


def local_search(
    inst: Instance,
    init: Union[ColdStart, WarmStart] = COLD_START,
    *,
    epsilon: float = 0.0,
    max_swaps: int = 1,
    evaluations: Optional[int] = None,
) -> RunResult:
    """Best-improvement swap search over bases for the pairwise-sum diversity.

    A cold start scans every independent pair for the best quality-plus-distance
    seed and extends it to a basis by ascending index; a warm start extends the
    given independent set. Each sweep evaluates the full exchange neighborhood
    (plus all double exchanges when ``max_swaps=2``), charging one evaluation
    per candidate, and applies the best move whose value exceeds the incumbent
    by more than the ``epsilon`` relative margin. Stops at a local optimum or
    when the evaluation budget runs out (the final sweep may be cut short; the
    best qualifying move found so far is still applied).
    """
    if inst.diversity != "sum":
        raise InstanceError("local search requires sum diversity")
    if max_swaps not in (1, 2):
        raise ValueError("max_swaps must be 1 or 2")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if evaluations is not None and evaluations < 1:
        raise ValueError("evaluation budget must be positive")
    c = inst.constraint
    counter = EvaluationCounter()
    budget = math.inf if evaluations is None else evaluations

    if isinstance(init, WarmStart):
        if not is_independent(init.subset, c):
            raise InstanceError("warm start is not independent")
        basis = extend_to_basis(init.subset, c)
    else:
        if budget < 2:
            raise ValueError("a cold start needs a budget of at least 2 evaluations")
        basis = _cold_start_basis(inst, counter, budget - 1)

    modular = isinstance(inst.quality, ModularQuality)
    w = inst.quality.weights if modular else None
    d = inst.distance.values
    cur = _sum_objective(basis.members(), inst)
    counter.add(1)
    trace = [(counter.count, cur)]

    while counter.count < budget:
        best_move: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None
        best_val = cur
        members = basis.members()
        row_mass = d[:, members].sum(axis=1) if len(members) else np.zeros(inst.n)
        exhausted = False
        for v, u in feasible_swaps(basis, c):
            if counter.count >= budget:
                exhausted = True
                break
            counter.add(1)
            if modular:
                val = cur + (w[u] - w[v]) + inst.lam * (row_mass[u] - d[u, v] - row_mass[v])
            else:
                swapped = basis.copy()
                swapped.discard(int(v))
                swapped.add(int(u))
                val = _sum_objective(swapped.members(), inst)
            if _improves(val, cur, epsilon) and val > best_val:
                best_move = ((int(v),), (int(u),))
                best_val = val
        if max_swaps == 2 and not exhausted:
            for outs, ins in _two_swap_candidates(basis, c):
                if counter.count >= budget:
                    exhausted = True
                    break
                swapped = basis.copy()
                for v in outs:
                    swapped.discard(v)
                for u in ins:
                    swapped.add(u)
                if not is_independent(swapped, c):
                    continue
                counter.add(1)
                val = _sum_objective(swapped.members(), inst)
                if _improves(val, cur, epsilon) and val > best_val:
                    best_move = (outs, ins)
                    best_val = val
        if best_move is None:
            break
        outs, ins = best_move
        for v in outs:
            basis.discard(v)
        for u in ins:
            basis.add(u)
        cur = best_val
        trace.append((counter.count, cur))
        if exhausted:
            break
    return RunResult(basis, cur, counter.count, trace)


def _cold_start_basis(inst: Instance, counter: EvaluationCounter, budget: float) -> Subset:
    """Best independent pair by quality-plus-weighted-distance, extended to a
    basis. The scan truncates once the budget is spent (after at least one
    pair, so the start stays well defined); a rank below 2 falls back to the
    plain ascending basis."""
    c = inst.constraint
    n = inst.n
    if rank(c) < 2:
        return extend_to_basis(Subset.empty(n), c)
    best_pair: Optional[tuple[int, int]] = None
    best_score = -math.inf
    pair = Subset.empty(n)
    for u in range(n):
        for v in range(u + 1, n):
            if best_pair is not None and counter.count >= budget:
                return extend_to_basis(Subset.from_items(n, best_pair), c)
            pair.add(u)
            pair.add(v)
            if is_independent(pair, c):
                counter.add(1)
                score = inst.quality.value(pair) + inst.lam * float(inst.distance.values[u, v])
                if score > best_score:
                    best_score = score
                    best_pair = (u, v)
            pair.discard(u)
            pair.discard(v)
    assert best_pair is not None, "rank >= 2 guarantees an independent pair"
    return extend_to_basis(Subset.from_items(n, best_pair), c)


def initial_population(
    form: Formulation,
    inst: Instance,
    init: Union[ZeroStart, WarmStart],
) -> Population:
    """Seed population: the empty set for a zero start, exactly the given
    solution for a warm start. Seeding is not charged to the budget."""
    pop = Population()
    if isinstance(init, WarmStart):
        seed = init.subset.copy()
        if not offspring_feasible(form, seed, inst):
            raise InstanceError("warm-start solution is infeasible for this formulation")
        perm = tuple(int(u) for u in seed.members()) if needs_permutation(form) else None
        pop.update(make_individual(form, seed, inst, perm=perm))
    else:
        empty = Subset.empty(inst.n)
        perm = () if needs_permutation(form) else None
        pop.update(make_individual(form, empty, inst, perm=perm))
    return pop


def gsemo(
    inst: Instance,
    form: Formulation,
    cfg: RunConfig,
    init: Union[ZeroStart, WarmStart] = ZERO_START,
) -> RunResult:
    """Pareto-based evolutionary optimizer with bit-wise mutation.

    Each iteration picks a population member uniformly at random, flips each
    of its n bits independently with probability 1/n (zero-flip clones are
    allowed), discards the offspring if it fails the formulation's feasibility
    filter, and otherwise inserts it unless strictly dominated, evicting
    everything it weakly dominates. Every iteration charges exactly one
    evaluation, whether or not the offspring survives the filter.
    """
    budget = cfg.budget()
    rng = cfg.rng.generator()
    n = inst.n
    counter = EvaluationCounter()
    pop = initial_population(form, inst, init)
    perm_based = needs_permutation(form)
    inv_n = 1.0 / n if n > 0 else 0.0

    stride = cfg.trace_stride if cfg.trace_stride is not None else max(1, budget // 200)
    if stride < 1:
        raise ValueError("trace stride must be positive")
    trace: list[tuple[int, float]] = []
    best_obj = -math.inf
    best_subset: Optional[Subset] = None
    best_perm: Optional[tuple[int, ...]] = None

    def checkpoint() -> bool:
        nonlocal best_obj, best_subset, best_perm
        ex = extract_final(form, pop.members(), inst)
        if ex.feasible and ex.objective > best_obj:
            best_obj = ex.objective
            best_subset = ex.subset
            best_perm = ex.perm
        if best_subset is not None:
            trace.append((counter.count, best_obj))
        return cfg.stop_objective is not None and best_obj >= cfg.stop_objective

    if not checkpoint():
        for _ in range(budget):
            parent = pop.random_member(rng)
            flips = rng.random(n) < inv_n
            child = Subset.from_bits(parent.subset.bits ^ flips, copy=False)
            counter.add(1)
            if offspring_feasible(form, child, inst):
                perm = mutate_permutation(parent.perm or (), child) if perm_based else None
                pop.update(make_individual(form, child, inst, perm=perm))
            if cfg.validate_population:
                pop.check_invariants(form, inst)
            if counter.count % stride == 0 and checkpoint():
                break
        if not trace or trace[-1][0] != counter.count:
            checkpoint()

    if best_subset is None:
        ex = extract_final(form, pop.members(), inst)
        return RunResult(ex.subset, ex.objective, counter.count, trace, feasible=False, perm=ex.perm)
    return RunResult(best_subset, best_obj, counter.count, trace, feasible=True, perm=best_perm)


def gsemo_min_pipeline(
    inst: Instance,
    rng: RngStream,
    t1: Optional[int] = None,
    t2: Optional[int] = None,
    *,
    trace_stride: Optional[int] = None,
    validate_population: bool = False,
) -> RunResult:
    """Two-phase evolutionary optimizer for the min-distance diversity: one
    run maximizes quality alone, an independent run maximizes the minimum
    pairwise distance, and the better extracted solution under the true
    objective wins (the quality phase on ties)."""
    if inst.diversity != "min":
        raise InstanceError("the two-phase pipeline requires min diversity")
    c = inst.constraint
    assert isinstance(c, UniformConstraint)
    n, k = inst.n, c.k
    t1 = quality_phase_iterations(n, k) if t1 is None else t1
    t2 = diversity_phase_iterations(n, k) if t2 is None else t2
    r1 = gsemo(
        inst,
        Formulation.MIN_QUALITY_PHASE,
        RunConfig(
            rng=rng.derived("quality-phase"),
            iterations=t1,
            trace_stride=trace_stride,
            validate_population=validate_population,
        ),
    )
    r2 = gsemo(
        inst,
        Formulation.MIN_DIVERSITY_PHASE,
        RunConfig(
            rng=rng.derived("diversity-phase"),
            iterations=t2,
            trace_stride=trace_stride,
            validate_population=validate_population,
        ),
    )
    total = r1.evaluations + r2.evaluations
    trace = list(r1.trace)
    best_so_far = r1.objective if r1.feasible else -math.inf
    for evals, obj in r2.trace:
        best_so_far = max(best_so_far, obj)
        trace.append((r1.evaluations + evals, best_so_far))

    candidates = [r for r in (r1, r2) if r.feasible]
    if not candidates:
        return RunResult(r1.best, r1.objective, total, trace, feasible=False)
    # max keeps the earlier entry on ties, so the quality phase wins them.
    winner = max(candidates, key=lambda r: r.objective)
    return RunResult(winner.best, winner.objective, total, trace, feasible=True)
