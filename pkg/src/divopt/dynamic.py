"""Dynamic-environment protocol: objective perturbations and warm-started
re-optimization.

A change event is a batch of independent perturbations, each resetting either
one item's relevance weight (domain [0, 1]) or one pairwise distance (domain
[1, 2], which keeps the matrix a metric). Constraints never change, so a
previously feasible solution stays feasible and can seed the next run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .algorithms import RunConfig, RunResult, WarmStart, gsemo, local_search
from .constraints import is_independent
from .core import DistanceMatrix, Instance, InstanceError, RngStream, Subset
from .formulations import Formulation
from .objectives import ModularQuality


@dataclass(frozen=True)
class RelevanceReset:
    item: int
    weight: float


@dataclass(frozen=True)
class DistanceReset:
    i: int
    j: int
    value: float


Perturbation = Union[RelevanceReset, DistanceReset]


@dataclass(frozen=True)
class DynamicSchedule:
    """A sequence of change events plus the per-change re-optimization budget
    in evaluations."""

    changes: tuple[tuple[Perturbation, ...], ...]
    budget_per_change: int

    def __post_init__(self) -> None:
        if self.budget_per_change < 1:
            raise ValueError("per-change budget must be at least one evaluation")
        if any(len(batch) < 1 for batch in self.changes):
            raise ValueError("each change must contain at least one perturbation")


def _check_dynamic_domain(inst: Instance) -> None:
    if not isinstance(inst.quality, ModularQuality):
        raise InstanceError("the dynamic protocol perturbs per-item weights and needs a modular quality")
    off_diag = inst.distance.values[~np.eye(inst.n, dtype=bool)]
    if off_diag.size and (off_diag.min() < 1.0 or off_diag.max() > 2.0):
        raise InstanceError("the dynamic protocol requires pairwise distances inside [1, 2]")


def sample_change(rng: np.random.Generator, inst: Instance, m: int) -> tuple[Perturbation, ...]:
    """Draw a batch of m independent perturbations: a fair coin picks the kind,
    the target item or unordered pair is uniform, and the new value is uniform
    over the kind's domain."""
    if m < 1:
        raise ValueError("a change needs at least one perturbation")
    _check_dynamic_domain(inst)
    n = inst.n
    batch: list[Perturbation] = []
    for _ in range(m):
        if rng.random() < 0.5:
            batch.append(RelevanceReset(int(rng.integers(n)), float(rng.random())))
        else:
            i = int(rng.integers(n))
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            batch.append(DistanceReset(min(i, j), max(i, j), 1.0 + float(rng.random())))
    return tuple(batch)


def make_schedule(
    stream: RngStream, inst: Instance, n_changes: int, m: int, budget_per_change: int
) -> DynamicSchedule:
    """Sample every change batch up front so a schedule is a fixed, replayable
    artifact of its stream."""
    rng = stream.generator()
    changes = tuple(sample_change(rng, inst, m) for _ in range(n_changes))
    return DynamicSchedule(changes, budget_per_change)


def apply_change(inst: Instance, batch: Sequence[Perturbation]) -> Instance:
    """New instance with the batch applied; the old instance is untouched."""
    assert isinstance(inst.quality, ModularQuality)
    weights = inst.quality.weights.copy()
    values = inst.distance.values.copy()
    for p in batch:
        if isinstance(p, RelevanceReset):
            if not 0.0 <= p.weight <= 1.0:
                raise InstanceError("relevance resets must land in [0, 1]")
            weights[p.item] = p.weight
        else:
            if not 1.0 <= p.value <= 2.0:
                raise InstanceError("distance resets must land in [1, 2]")
            if p.i == p.j:
                raise InstanceError("distance resets need two distinct items")
            values[p.i, p.j] = p.value
            values[p.j, p.i] = p.value
    return Instance(
        n=inst.n,
        quality=ModularQuality(weights),
        distance=DistanceMatrix(values),
        lam=inst.lam,
        constraint=inst.constraint,
        diversity=inst.diversity,
        names=inst.names,
    )


# A runner re-optimizes one instance from a warm solution within an
# evaluation budget.
Runner = Callable[[Instance, Subset, int, RngStream], RunResult]


def gsemo_runner(form: Formulation, trace_stride: int | None = None) -> tuple[str, Runner]:
    def run(inst: Instance, warm: Subset, evaluations: int, stream: RngStream) -> RunResult:
        cfg = RunConfig(rng=stream, evaluations=evaluations, trace_stride=trace_stride)
        return gsemo(inst, form, cfg, init=WarmStart(warm))

    return "gsemo", run


def local_search_runner(max_swaps: int = 1) -> tuple[str, Runner]:
    def run(inst: Instance, warm: Subset, evaluations: int, stream: RngStream) -> RunResult:
        return local_search(inst, WarmStart(warm), max_swaps=max_swaps, evaluations=evaluations)

    return "local_search", run


@dataclass(frozen=True)
class DynamicRecord:
    change_index: int
    algorithm: str
    objective: float
    evaluations: int


def run_dynamic(
    inst0: Instance,
    schedule: DynamicSchedule,
    algorithms: Sequence[tuple[str, Runner]],
    initial: Subset,
    stream: RngStream,
) -> list[DynamicRecord]:
    """Apply each change and let every algorithm re-optimize from its own
    previous solution (the shared ``initial`` before the first change) for the
    per-change budget, recording the objective reached under the new instance.
    """
    if not is_independent(initial, inst0.constraint):
        raise InstanceError("the starting solution violates the constraint")
    inst = inst0
    state: dict[str, Subset] = {name: initial for name, _ in algorithms}
    records: list[DynamicRecord] = []
    for idx, batch in enumerate(schedule.changes):
        inst = apply_change(inst, batch)
        for name, runner in algorithms:
            res = runner(inst, state[name], schedule.budget_per_change, stream.derived(name, idx))
            # Constraints never change, so warm solutions stay independent.
            assert is_independent(res.best, inst.constraint)
            state[name] = res.best
            records.append(DynamicRecord(idx, name, res.objective, res.evaluations))
    return records
