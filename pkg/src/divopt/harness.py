"""Instance generation, benchmark orchestration, and statistics.

Benchmark cells are a pure function of (plan, master seed); wall-clock time is
recorded for convenience but never enters any check. Evaluations are the
canonical cost.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .algorithms import (
    RunConfig,
    RunResult,
    WarmStart,
    default_gsemo_iterations,
    greedy_sum,
    gsemo,
    local_search,
)
from .constraints import UniformConstraint
from .core import DistanceMatrix, Instance, RngStream
from .formulations import Formulation
from .objectives import ModularQuality

RESULT_COLUMNS = (
    "instance_id",
    "algorithm",
    "seed",
    "k",
    "lambda",
    "objective",
    "evaluations",
    "wallclock_ms",
)


def gen_synthetic_web(
    stream: Union[RngStream, int],
    n: int,
    *,
    k: int,
    lam: float = 1.0,
    exact: bool = False,
) -> Instance:
    """Synthetic retrieval instance: per-item relevance uniform on [0, 1] and
    pairwise distances uniform on [1, 2], which is a metric by construction."""
    if n < 2:
        raise ValueError("need at least two items")
    rng = (RngStream(stream) if isinstance(stream, int) else stream).generator()
    weights = rng.random(n)
    values = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    values[iu] = 1.0 + rng.random(iu[0].size)
    values = values + values.T
    return Instance(
        n=n,
        quality=ModularQuality(weights),
        distance=DistanceMatrix(values),
        lam=lam,
        constraint=UniformConstraint(k, exact=exact),
        diversity="sum",
    )


@dataclass(frozen=True)
class BenchPlan:
    """One benchmark: a synthetic-instance family swept over budgets and
    tradeoffs, each cell run once per trial seed."""

    n: int
    ks: tuple[int, ...]
    lams: tuple[float, ...]
    trials: int
    algorithms: tuple[str, ...] = ("greedy", "local_search", "gsemo")
    master_seed: int = 0
    trace_stride: Optional[int] = None


@dataclass
class BenchRow:
    instance_id: str
    algorithm: str
    seed: int
    k: int
    lam: float
    objective: float
    evaluations: int
    wallclock_ms: float
    trace: list[tuple[int, float]] = field(default_factory=list, repr=False)


def _bench_local_search(inst: Instance, stream: RngStream) -> RunResult:
    """Improved local search: start from the greedy solution and sweep best
    swaps until a local optimum; the greedy prefix is part of the accounting."""
    g = greedy_sum(inst)
    ls = local_search(inst, WarmStart(g.best), max_swaps=1)
    trace = list(g.trace) + [(g.evaluations + e, max(o, g.objective)) for e, o in ls.trace]
    return RunResult(ls.best, ls.objective, g.evaluations + ls.evaluations, trace)


def run_cell(algorithm: str, inst: Instance, k: int, stream: RngStream, trace_stride: Optional[int]) -> RunResult:
    if algorithm == "greedy":
        return greedy_sum(inst)
    if algorithm == "local_search":
        return _bench_local_search(inst, stream)
    if algorithm == "gsemo":
        cfg = RunConfig(
            rng=stream,
            iterations=default_gsemo_iterations(inst.n, k),
            trace_stride=trace_stride,
        )
        return gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_bench(plan: BenchPlan, workers: int = 1) -> list[BenchRow]:
    """Run every (k, lambda, trial, algorithm) cell. Instances are shared
    across the sweep axes: trial t always sees the same drawn data."""
    master = RngStream(plan.master_seed)
    cells = [
        (k, lam, trial, algorithm)
        for k in plan.ks
        for lam in plan.lams
        for trial in range(plan.trials)
        for algorithm in plan.algorithms
    ]

    def one(cell: tuple[int, float, int, str]) -> BenchRow:
        k, lam, trial, algorithm = cell
        inst = gen_synthetic_web(master.derived("instance", trial), plan.n, k=k, lam=lam)
        stream = master.derived("run", trial, algorithm, k, lam)
        start = time.perf_counter()
        res = run_cell(algorithm, inst, k, stream, plan.trace_stride)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return BenchRow(
            instance_id=f"syn-n{plan.n}-t{trial}",
            algorithm=algorithm,
            seed=trial,
            k=k,
            lam=lam,
            objective=res.objective,
            evaluations=res.evaluations,
            wallclock_ms=elapsed_ms,
            trace=res.trace,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, cells))
    return [one(cell) for cell in cells]


def write_results(rows: Sequence[BenchRow], path: Union[str, Path]) -> None:
    lines = [",".join(RESULT_COLUMNS)]
    for r in rows:
        lines.append(
            f"{r.instance_id},{r.algorithm},{r.seed},{r.k},{r.lam!r},"
            f"{r.objective!r},{r.evaluations},{r.wallclock_ms:.3f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class StatsSummary:
    mean: float
    std: float
    count: int


def summarize(values: Sequence[float]) -> StatsSummary:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return StatsSummary(float(arr.mean()), std, int(arr.size))


def _midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their midrank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_two_sided: Optional[float]
    n_used: int
    inconclusive: bool = False


EXACT_SIGNED_RANK_MAX_N = 25


def _exact_signed_rank_p(w: float, ranks: np.ndarray) -> float:
    """Exact two-sided p over all sign assignments, via convolution on doubled
    ranks (doubling keeps midranks integral)."""
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total - r + 1]
        counts = counts + shifted
    cutoff = int(math.floor(2.0 * w + 1e-9))
    tail = float(counts[: cutoff + 1].sum()) / 2.0 ** len(ranks)
    return min(1.0, 2.0 * tail)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Paired signed-rank test, two-sided, with midranks for tied magnitudes.

    Small samples get the exact sign-assignment distribution (the plain normal
    approximation can stray by more than 0.03 from it around the median for
    n <= 6); larger ones use the normal approximation with continuity and tie
    corrections. Zero differences are dropped; fewer than five nonzero
    differences make the test inconclusive (no p-value) rather than producing
    a misleading one.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    diff = a - b
    diff = diff[diff != 0.0]
    n = int(diff.size)
    if n < 5:
        return WilcoxonResult(statistic=math.nan, p_two_sided=None, n_used=n, inconclusive=True)
    ranks = _midranks(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    w = min(w_plus, w_minus)
    if n <= EXACT_SIGNED_RANK_MAX_N:
        return WilcoxonResult(statistic=w, p_two_sided=_exact_signed_rank_p(w, ranks), n_used=n)
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(diff), return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    if var <= 0.0:
        return WilcoxonResult(statistic=w, p_two_sided=1.0, n_used=n)
    z = (w - mu + 0.5) / math.sqrt(var)
    return WilcoxonResult(statistic=w, p_two_sided=min(1.0, 2.0 * _normal_cdf(z)), n_used=n)


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Two-sample rank-sum test (Mann-Whitney U), two-sided, with midranks and
    a tie-corrected normal approximation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    n1, n2 = int(a.size), int(b.size)
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u = min(u1, n1 * n2 - u1)
    mu = n1 * n2 / 2.0
    total = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum()) / (total * (total - 1))
    var = n1 * n2 / 12.0 * ((total + 1) - tie_term)
    if var <= 0.0:
        return WilcoxonResult(statistic=u, p_two_sided=1.0, n_used=total)
    z = (u - mu + 0.5) / math.sqrt(var)
    return WilcoxonResult(statistic=u, p_two_sided=min(1.0, 2.0 * _normal_cdf(z)), n_used=total)


def trace_export(
    traces: Mapping[str, Sequence[Sequence[tuple[int, float]]]],
    out_dir: Optional[Union[str, Path]] = None,
) -> dict[str, list[tuple[int, float]]]:
    """Average best-so-far curves across trials, one curve per algorithm.

    Trials of one algorithm must share their evaluation grid pointwise on the
    common prefix (a stride mismatch is an error); shorter trials carry their
    final best forward, which is exact for best-so-far curves.
    """
    curves: dict[str, list[tuple[int, float]]] = {}
    for name, trials in traces.items():
        trials = [list(t) for t in trials if t]
        if not trials:
            curves[name] = []
            continue
        longest = max(trials, key=len)
        grid = [e for e, _ in longest]
        for t in trials:
            for (e, _), expected in zip(t, grid):
                if e != expected:
                    raise ValueError(f"trace stride mismatch across trials of {name!r}")
        sums = np.zeros(len(grid))
        for t in trials:
            vals = [o for _, o in t]
            vals = vals + [vals[-1]] * (len(grid) - len(vals))
            sums += np.asarray(vals)
        curves[name] = list(zip(grid, (sums / len(trials)).tolist()))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, curve in curves.items():
            lines = ["evaluations,mean_best_objective"]
            lines += [f"{e},{v!r}" for e, v in curve]
            (out / f"{name}_trace.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return curves
