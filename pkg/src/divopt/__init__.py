"""Result-diversification toolkit: select subsets scoring high on quality plus
a weighted diversity term under cardinality or partition-matroid constraints.
"""

__version__ = "0.1.0"

from .algorithms import (
    COLD_START,
    ZERO_START,
    ColdStart,
    Population,
    RunConfig,
    RunResult,
    WarmStart,
    ZeroStart,
    default_gsemo_iterations,
    diversity_phase_iterations,
    greedy_min,
    greedy_mst,
    greedy_scan_evaluations,
    greedy_sum,
    gsemo,
    gsemo_min_pipeline,
    local_search,
    quality_phase_iterations,
)
from .constraints import (
    Constraint,
    PartitionConstraint,
    UniformConstraint,
    extend_to_basis,
    feasible_swaps,
    is_final_feasible,
    is_independent,
    rank,
)
from .core import (
    DistanceMatrix,
    Instance,
    InstanceError,
    MetricReport,
    RngStream,
    Subset,
    load_instance,
    save_instance,
    validate_metric,
)
from .dynamic import (
    DistanceReset,
    DynamicRecord,
    DynamicSchedule,
    RelevanceReset,
    apply_change,
    gsemo_runner,
    local_search_runner,
    make_schedule,
    run_dynamic,
    sample_change,
)
from .formulations import (
    BiObjectiveValue,
    Extraction,
    Formulation,
    Individual,
    dominates,
    evaluate,
    extract_final,
    make_individual,
    mutate_permutation,
    offspring_feasible,
    strictly_dominates,
    weakly_dominates,
)
from .harness import (
    BenchPlan,
    BenchRow,
    StatsSummary,
    WilcoxonResult,
    gen_synthetic_web,
    run_bench,
    summarize,
    trace_export,
    wilcoxon_rank_sum,
    wilcoxon_signed_rank,
    write_results,
)
from .objectives import (
    INFINITE_DIVERSITY,
    EvaluationCounter,
    InfiniteDiversity,
    ModularQuality,
    QualityOracle,
    TopPMIQuality,
    min_diversity,
    mst_diversity,
    normalized_mi_from_data,
    objective,
    permutation_mst_proxy,
    sum_diversity,
    sum_diversity_marginal,
)
from .oracle import (
    OptResult,
    RatioReport,
    SubmodularityReport,
    brute_force_opt,
    check_submodular,
    hard_min_instance,
    verify_ratio,
)
