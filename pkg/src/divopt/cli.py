"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .algorithms import (
    RunConfig,
    RunResult,
    WarmStart,
    default_gsemo_iterations,
    greedy_min,
    greedy_mst,
    greedy_sum,
    gsemo,
    gsemo_min_pipeline,
    local_search,
)
from .constraints import PartitionConstraint, UniformConstraint
from .core import Instance, InstanceError, RngStream, load_instance, save_instance
from .dynamic import DynamicRecord, gsemo_runner, local_search_runner, make_schedule, run_dynamic
from .formulations import Formulation
from .harness import (
    BenchPlan,
    gen_synthetic_web,
    run_bench,
    summarize,
    trace_export,
    wilcoxon_signed_rank,
    write_results,
)
from .oracle import brute_force_opt, verify_ratio


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="divopt", description="Quality-plus-diversity subset selection toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen", parents=[], help="generate a synthetic retrieval instance")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--mode", choices=["at_most", "exact"], default="at_most")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("featurize", help="build a feature-selection instance from discrete data")
    p.add_argument("--features", required=True, help="delimited text, one sample per row")
    p.add_argument("--labels", required=True)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--lam", type=float, default=0.5)
    p.add_argument("--mode", choices=["at_most", "exact"], default="at_most")
    p.add_argument("--delimiter", default=None, help="default: auto (comma, then whitespace)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("run", help="run one algorithm on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument(
        "--algorithm",
        required=True,
        choices=["greedy", "local_search", "local_search_improved", "gsemo", "gsemo_min_pipeline"],
    )
    p.add_argument("--formulation", choices=[f.value for f in Formulation], default=None)
    p.add_argument("--budget", type=int, default=None, help="iterations (default: guarantee budget)")
    p.add_argument("--max-swaps", type=int, default=1, choices=[1, 2])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace-stride", type=int, default=None)
    p.add_argument("--out", default=None, help="optional trace CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run a benchmark sweep and write result tables")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--ks", default="10", help="comma-separated budgets")
    p.add_argument("--lams", default="1.0", help="comma-separated tradeoffs")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--algorithms", default="greedy,local_search,gsemo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace-stride", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dynamic", help="perturb the objective repeatedly and re-optimize warm")
    p.add_argument("--instance", default=None, help="instance file (default: synthetic)")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--changes", type=int, default=10)
    p.add_argument("--m", type=int, default=50, help="perturbations per change")
    p.add_argument("--t", type=int, default=None, help="evaluations per change (default 10*k*n)")
    p.add_argument("--max-swaps", type=int, default=1, choices=[1, 2])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional CSV path")
    p.set_defaults(func=cmd_dynamic)

    p = sub.add_parser("verify", help="oracle-checked approximation ratios on small instances")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("hard", help="write the deceptive min-diversity instance")
    p.add_argument("--n", type=int, default=18, help="multiple of 18")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hard)

    return parser


def cmd_gen(args: argparse.Namespace) -> int:
    inst = gen_synthetic_web(RngStream(args.seed), args.n, k=args.k, lam=args.lam, exact=(args.mode == "exact"))
    save_instance(inst, args.out)
    print(f"wrote {args.out} (n={inst.n}, k={args.k}, lambda={args.lam})")
    return 0


def _read_int_table(path: str, delimiter: Optional[str]) -> np.ndarray:
    try:
        lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InstanceError(f"{path} holds no data rows")

    def split(ln: str) -> list[str]:
        if delimiter is not None:
            return [c.strip() for c in ln.split(delimiter)]
        return [c.strip() for c in (ln.split(",") if "," in ln else ln.split())]

    rows = [split(ln) for ln in lines]
    try:
        int(rows[0][0])
    except ValueError:
        rows = rows[1:]  # header row detected by its non-numeric cells
        if not rows:
            raise InstanceError(f"{path} holds only a header")
    width = len(rows[0])
    table = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InstanceError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")
        try:
            table.append([int(c) for c in row])
        except ValueError as exc:
            raise InstanceError(f"{path}: row {i + 1} has a non-integer cell") from exc
    return np.asarray(table, dtype=np.int64)


def cmd_featurize(args: argparse.Namespace) -> int:
    from .objectives import TopPMIQuality, normalized_mi_from_data

    features = _read_int_table(args.features, args.delimiter)
    labels = _read_int_table(args.labels, args.delimiter)
    if features.shape[0] != labels.shape[0]:
        raise InstanceError(
            f"feature rows ({features.shape[0]}) and label rows ({labels.shape[0]}) disagree"
        )
    mi, distance = normalized_mi_from_data(features, labels)
    inst = Instance(
        n=features.shape[1],
        quality=TopPMIQuality(mi, args.p),
        distance=distance,
        lam=args.lam,
        constraint=UniformConstraint(args.k, exact=(args.mode == "exact")),
        diversity="sum",
    )
    save_instance(inst, args.out)
    print(f"wrote {args.out} (n={inst.n}, labels={mi.shape[1]}, p={args.p})")
    return 0


def _default_formulation(inst: Instance) -> Formulation:
    if isinstance(inst.constraint, PartitionConstraint):
        return Formulation.MATROID_SUM
    if inst.diversity == "mst":
        return Formulation.MST_PERMUTATION
    return Formulation.SCALED_CARDINALITY_SUM


def cmd_run(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    stream = RngStream(args.seed)
    if args.algorithm == "greedy":
        res = {"sum": greedy_sum, "min": greedy_min, "mst": greedy_mst}[inst.diversity](inst)
    elif args.algorithm == "local_search":
        res = local_search(inst, max_swaps=args.max_swaps)
    elif args.algorithm == "local_search_improved":
        warm = greedy_sum(inst)
        res = local_search(inst, WarmStart(warm.best), max_swaps=args.max_swaps)
    elif args.algorithm == "gsemo_min_pipeline":
        res = gsemo_min_pipeline(inst, stream, trace_stride=args.trace_stride)
    else:
        form = Formulation(args.formulation) if args.formulation else _default_formulation(inst)
        k = inst.constraint.k if isinstance(inst.constraint, UniformConstraint) else max(inst.n // 10, 2)
        budget = args.budget if args.budget is not None else default_gsemo_iterations(inst.n, k)
        cfg = RunConfig(rng=stream, iterations=budget, trace_stride=args.trace_stride)
        res = gsemo(inst, form, cfg)
    print(f"algorithm: {args.algorithm}")
    print(f"objective: {res.objective!r}")
    print(f"evaluations: {res.evaluations}")
    print(f"feasible: {res.feasible}")
    print(f"members: {res.best.members().tolist()}")
    if args.out:
        lines = ["evaluations,best_objective"] + [f"{e},{o!r}" for e, o in res.trace]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"trace written to {args.out}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        ks = tuple(int(x) for x in args.ks.split(",") if x)
        lams = tuple(float(x) for x in args.lams.split(",") if x)
    except ValueError as exc:
        raise UsageError(f"bad sweep axis: {exc}") from exc
    plan = BenchPlan(
        n=args.n,
        ks=ks,
        lams=lams,
        trials=args.trials,
        algorithms=tuple(args.algorithms.split(",")),
        master_seed=args.seed,
        trace_stride=args.trace_stride,
    )
    rows = run_bench(plan, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_results(rows, out / "results.csv")

    summary_lines = ["k,lambda,algorithm,mean,std,count"]
    stats_lines = ["k,lambda,algorithm_a,algorithm_b,statistic,p_two_sided,n_used,inconclusive"]
    for k in ks:
        for lam in lams:
            cell = {a: [r.objective for r in rows if (r.k, r.lam, r.algorithm) == (k, lam, a)] for a in plan.algorithms}
            for a in plan.algorithms:
                s = summarize(cell[a])
                summary_lines.append(f"{k},{lam!r},{a},{s.mean!r},{s.std!r},{s.count}")
            for i, a in enumerate(plan.algorithms):
                for b in plan.algorithms[i + 1 :]:
                    w = wilcoxon_signed_rank(cell[a], cell[b])
                    p = "" if w.p_two_sided is None else repr(w.p_two_sided)
                    stats_lines.append(f"{k},{lam!r},{a},{b},{w.statistic},{p},{w.n_used},{w.inconclusive}")
            traces = {
                a: [r.trace for r in rows if (r.k, r.lam, r.algorithm) == (k, lam, a)]
                for a in plan.algorithms
            }
            trace_export(traces, out / "traces" / f"k{k}_lam{lam}")
    (out / "summary.csv").write_text("\n".join(summary_lines) + "\n", encoding="utf-8")
    (out / "stats.csv").write_text("\n".join(stats_lines) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} rows under {out}")
    return 0


def cmd_dynamic(args: argparse.Namespace) -> int:
    stream = RngStream(args.seed)
    if args.instance:
        inst = load_instance(args.instance)
        if not isinstance(inst.constraint, UniformConstraint):
            k = None
        else:
            k = inst.constraint.k
    else:
        inst = gen_synthetic_web(stream.derived("instance"), args.n, k=args.k, lam=args.lam)
        k = args.k
    t = args.t if args.t is not None else (10 * (k or 10) * inst.n)
    schedule = make_schedule(stream.derived("schedule"), inst, args.changes, args.m, t)
    warm = greedy_sum(inst)
    form = _default_formulation(inst)
    records = run_dynamic(
        inst,
        schedule,
        [gsemo_runner(form), local_search_runner(max_swaps=args.max_swaps)],
        warm.best,
        stream.derived("runs"),
    )
    lines = ["change_index,algorithm,objective,evaluations"]
    lines += [f"{r.change_index},{r.algorithm},{r.objective!r},{r.evaluations}" for r in records]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    """Small oracle-backed suite: each row checks one guaranteed ratio."""
    from .algorithms import quality_phase_iterations
    from .constraints import UniformConstraint as UC

    master = RngStream(args.seed)
    failures = 0
    rows: list[tuple[str, str, float, float, bool]] = []

    def record(tag: str, algo: str, achieved: float, required: float, passed: bool) -> None:
        nonlocal failures
        failures += 0 if passed else 1
        rows.append((tag, algo, achieved, required, passed))

    for idx in range(6):
        rng = master.derived("sum", idx).generator()
        n = int(rng.integers(8, 13))
        k = int(rng.integers(2, 5))
        lam = float(rng.choice([0.5, 1.0]))
        inst = gen_synthetic_web(master.derived("sum-inst", idx), n, k=k, lam=lam)
        tag = f"sum-{idx} (n={n},k={k})"
        rep = verify_ratio(greedy_sum(inst), inst, 0.5)
        record(tag, "greedy", rep.achieved, 0.5, rep.passed)
        cfg = RunConfig(rng=master.derived("sum-run", idx), iterations=default_gsemo_iterations(n, k))
        rep = verify_ratio(gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg), inst, 0.5)
        record(tag, "gsemo", rep.achieved, 0.5, rep.passed)

    for idx in range(4):
        rng = master.derived("min", idx).generator()
        n = int(rng.integers(8, 13))
        inst = gen_synthetic_web(master.derived("min-inst", idx), n, k=3, lam=1.0, exact=True)
        inst = Instance(inst.n, inst.quality, inst.distance, inst.lam, UC(3, exact=True), "min")
        tag = f"min-{idx} (n={n},k=3)"
        rep = verify_ratio(gsemo_min_pipeline(inst, master.derived("min-run", idx)), inst, 0.25)
        record(tag, "gsemo_min_pipeline", rep.achieved, 0.25, rep.passed)

    for idx in range(4):
        rng = master.derived("mst", idx).generator()
        n = int(rng.integers(8, 13))
        inst = gen_synthetic_web(master.derived("mst-inst", idx), n, k=4, lam=1.0, exact=True)
        inst = Instance(inst.n, inst.quality, inst.distance, inst.lam, UC(4, exact=True), "mst")
        tag = f"mst-{idx} (n={n},k=4)"
        required = (1 - 1 / np.e) / (2 * np.log2(4))
        cfg = RunConfig(rng=master.derived("mst-run", idx), iterations=quality_phase_iterations(n, 4))
        rep = verify_ratio(gsemo(inst, Formulation.MST_PERMUTATION, cfg), inst, required)
        record(tag, "gsemo_mst", rep.achieved, required, rep.passed)

    width = max(len(r[0]) for r in rows)
    for tag, algo, achieved, required, passed in rows:
        status = "PASS" if passed else "FAIL"
        print(f"{tag:<{width}}  {algo:<20} achieved={achieved:.4f} required={required:.4f} {status}")
    print(f"{len(rows) - failures}/{len(rows)} checks passed")
    return 0 if failures == 0 else 2


def cmd_hard(args: argparse.Namespace) -> int:
    from .oracle import hard_min_instance

    inst = hard_min_instance(args.n)
    save_instance(inst, args.out)
    print(f"wrote {args.out} (n={args.n}, k={args.n // 2})")
    return 0


def cli_dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
