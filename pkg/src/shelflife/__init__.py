"""Re-annotation workbench for IR test collections.

Parses TREC qrels/runs, manages secondary-pool construction and annotation
capture, and computes the agreement, aggregation, combination-sampling,
system-order-stability, and annotator-as-oracle analyses that together
estimate how reliable (and how expired) a test collection's judgments are.
"""

from .aggregation import AggregateOp, aggregate_judgments
from .agreement import (
    AgreementReport,
    GradeRatio,
    TransitionMatrix,
    agreement_report,
    cohen_kappa,
    fleiss_items,
    fleiss_kappa,
    grade_ratios,
    overlap,
    transition_matrix,
)
from .combinations import (
    CombinationSpec,
    SampleConfig,
    available_sets_per_topic,
    count_combinations,
    enumerate_combinations,
    realize_combination,
    sample_combinations,
)
from .metrics import (
    EffectivenessReport,
    MetricId,
    MetricOptions,
    compute_metric,
    evaluate_systems,
    filter_judged_only,
)
from .oracle import build_oracle_run, oracle_comparison_table, oracle_stability
from .pooling import (
    Assignment,
    PoolConfig,
    TopicPool,
    assign_topics,
    build_secondary_pool,
    task_lists,
)
from .stability import (
    CorrelationResult,
    RankDeltaReport,
    SwapMatrix,
    SystemOrdering,
    paired_t_test_bonferroni,
    rank_correlations,
    rank_delta,
    rbo_extrapolated,
    swap_analysis,
    wilcoxon_signed_rank,
)
from .trec_io import (
    AnnotationSet,
    Run,
    RunEntry,
    export_fractional_qrels,
    export_qrels,
    export_run,
    parse_annotation_log,
    parse_qrels,
    parse_run,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateOp",
    "AgreementReport",
    "AnnotationSet",
    "Assignment",
    "CombinationSpec",
    "CorrelationResult",
    "EffectivenessReport",
    "GradeRatio",
    "MetricId",
    "MetricOptions",
    "PoolConfig",
    "RankDeltaReport",
    "Run",
    "RunEntry",
    "SampleConfig",
    "SwapMatrix",
    "SystemOrdering",
    "TopicPool",
    "TransitionMatrix",
    "aggregate_judgments",
    "agreement_report",
    "assign_topics",
    "available_sets_per_topic",
    "build_oracle_run",
    "build_secondary_pool",
    "cohen_kappa",
    "compute_metric",
    "count_combinations",
    "enumerate_combinations",
    "evaluate_systems",
    "export_fractional_qrels",
    "export_qrels",
    "export_run",
    "filter_judged_only",
    "fleiss_items",
    "fleiss_kappa",
    "grade_ratios",
    "oracle_comparison_table",
    "oracle_stability",
    "overlap",
    "paired_t_test_bonferroni",
    "parse_annotation_log",
    "parse_qrels",
    "parse_run",
    "rank_correlations",
    "rank_delta",
    "rbo_extrapolated",
    "realize_combination",
    "sample_combinations",
    "swap_analysis",
    "task_lists",
    "transition_matrix",
    "wilcoxon_signed_rank",
]
