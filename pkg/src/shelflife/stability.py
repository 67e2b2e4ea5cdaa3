"""System-order robustness under alternative judgment sets.

Swap-probability matrices over sampled combinations, rank correlations
(Kendall's tau-b, Spearman's rho, rank-biased overlap), aggregated rank
deltas against official judgments, and the two significance tests used to
flag effect and rank changes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from statistics import NormalDist, median
from typing import NamedTuple, Sequence

from scipy.stats import t as t_dist

from .combinations import CombinationSpec
from .errors import DegenerateError, FormatError, InsufficientDataError
from .metrics import MetricId, MetricOptions, topic_value
from .trec_io import AnnotationSet, Run, TopicId

DEFAULT_RBO_P = 0.9
SIGNIFICANCE_LEVEL = 0.05


@dataclass
class SwapMatrix:
    """Pairwise win counts over sampled judgment sets.

    counts[i][j] is the number of samples where system i scored strictly
    higher than system j; ties increment neither side, so
    counts[i][j] + counts[j][i] <= samples. delta_sums accumulates
    |mean_i - mean_j| for the scatter export.
    """

    systems: list[str]
    counts: list[list[int]]
    samples: int
    delta_sums: list[list[float]] = field(default_factory=list)

    def swap_probability(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return min(self.counts[i][j], self.counts[j][i]) / self.samples

    def mean_abs_delta(self, i: int, j: int) -> float:
        if not self.delta_sums or i == j:
            return 0.0
        return self.delta_sums[i][j] / self.samples


@dataclass
class SystemOrdering:
    """Tags with metric values, descending by value (ties broken by tag)."""

    entries: list[tuple[str, float]]

    @classmethod
    def from_means(cls, means: dict[str, float]) -> "SystemOrdering":
        ordered = sorted(means.items(), key=lambda item: (-item[1], item[0]))
        return cls(entries=ordered)

    def tags(self) -> list[str]:
        return [tag for tag, _ in self.entries]

    def value(self, tag: str) -> float:
        for t, v in self.entries:
            if t == tag:
                return v
        raise KeyError(tag)

    def ranks(self) -> dict[str, int]:
        """Ordinal ranks 1..n in list order (deterministic under ties)."""
        return {tag: i for i, (tag, _) in enumerate(self.entries, start=1)}


class CorrelationResult(NamedTuple):
    tau: float
    rho: float
    rbo: float


@dataclass
class TTestResult:
    t_statistic: float
    raw_p: float
    adjusted_p: float
    significant: bool
    degenerate: bool = False


class WilcoxonResult(NamedTuple):
    w_statistic: float
    p_value: float
    n: int


@dataclass
class RankDeltaReport:
    """Per-system distributions of (rank under combination - official rank)."""

    systems: list[str]
    official_ranks: dict[str, int]
    deltas: dict[str, list[int]]

    def summary(self, tag: str) -> tuple[float, float]:
        values = self.deltas[tag]
        return sum(values) / len(values), float(median(values))


# ---------------------------------------------------------------------------
# per-topic tables: evaluate (run, topic, candidate set) units once


def per_topic_table(
    runs: Sequence[Run],
    sets_per_topic: dict[TopicId, list[AnnotationSet]],
    metric: MetricId,
    opts: MetricOptions,
) -> dict[str, dict[TopicId, list[float | None]]]:
    """table[tag][topic][choice] = topic metric value under that choice.

    Realized-combination means reduce to index lookups in this table, which
    keeps sampling costs independent of the metric evaluation cost.
    """
    table: dict[str, dict[TopicId, list[float | None]]] = {}
    for run in runs:
        per_topic: dict[TopicId, list[float | None]] = {}
        for topic, candidates in sets_per_topic.items():
            ranking = run.ranking(topic)
            per_topic[topic] = [
                topic_value(metric, opts, ranking, candidate.by_topic(topic))
                for candidate in candidates
            ]
        table[run.tag] = per_topic
    return table


def means_for_spec(
    table: dict[str, dict[TopicId, list[float | None]]], spec: CombinationSpec
) -> dict[str, float]:
    """Mean metric per system under one combination spec."""
    means = {}
    for tag, per_topic in table.items():
        values = [
            per_topic[topic][choice]
            for topic, choice in spec.choice.items()
            if per_topic[topic][choice] is not None
        ]
        means[tag] = sum(values) / len(values) if values else 0.0
    return means


# ---------------------------------------------------------------------------
# swap analysis


def swap_matrix_from_means(
    tags: list[str], per_sample_means: list[dict[str, float]]
) -> SwapMatrix:
    n = len(tags)
    counts = [[0] * n for _ in range(n)]
    delta_sums = [[0.0] * n for _ in range(n)]
    for means in per_sample_means:
        values = [means[tag] for tag in tags]
        for i in range(n):
            for j in range(i + 1, n):
                if values[i] > values[j]:
                    counts[i][j] += 1
                elif values[j] > values[i]:
                    counts[j][i] += 1
                delta = abs(values[i] - values[j])
                delta_sums[i][j] += delta
                delta_sums[j][i] += delta
    return SwapMatrix(
        systems=list(tags),
        counts=counts,
        samples=len(per_sample_means),
        delta_sums=delta_sums,
    )


def swap_analysis(
    runs: Sequence[Run],
    combination_sets: Sequence[AnnotationSet],
    metric: MetricId,
    opts: MetricOptions = MetricOptions(),
) -> SwapMatrix:
    """Count pairwise wins of every system pair across realized sets."""
    if len(runs) < 2:
        raise InsufficientDataError("swap analysis needs >= 2 runs")
    if not combination_sets:
        raise InsufficientDataError("swap analysis needs >= 1 combination set")
    from .metrics import compute_metric

    per_sample_means = []
    for judgment_set in combination_sets:
        per_sample_means.append(
            {run.tag: compute_metric(run, judgment_set, metric, opts).mean for run in runs}
        )
    return swap_matrix_from_means([r.tag for r in runs], per_sample_means)


# ---------------------------------------------------------------------------
# rank correlations


def _kendall_tau_b(x: list[float], y: list[float]) -> float:
    """Tie-aware Kendall's tau: (C - D) / sqrt((n0 - n1)(n0 - n2))."""
    n = len(x)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            sign = (x[i] - x[j]) * (y[i] - y[j])
            if sign > 0:
                concordant += 1
            elif sign < 0:
                discordant += 1
    n0 = n * (n - 1) // 2
    ties_x = _tie_pair_count(x)
    ties_y = _tie_pair_count(y)
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        raise DegenerateError("all values tied in one ordering")
    return (concordant - discordant) / denom


def _tie_pair_count(values: list[float]) -> int:
    groups: dict[float, int] = defaultdict(int)
    for v in values:
        groups[v] += 1
    return sum(g * (g - 1) // 2 for g in groups.values())


def _average_ranks(values: list[float]) -> list[float]:
    """Ranks 1..n by descending value; tied values share the average rank."""
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = average
        i = j + 1
    return ranks


def _pearson(x: list[float], y: list[float]) -> float:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    if vx == 0 or vy == 0:
        raise DegenerateError("zero variance in ranks")
    return cov / math.sqrt(vx * vy)


def rbo_extrapolated(a: list[str], b: list[str], p: float = DEFAULT_RBO_P) -> float:
    """Extrapolated rank-biased overlap of two same-length full rankings.

    RBO_ext = (1-p)/p * sum_d (X_d / d) p^d  +  (X_l / l) p^l, where X_d is
    the overlap of the depth-d prefixes.
    """
    if len(a) != len(b) or set(a) != set(b):
        raise FormatError("RBO here expects permutations of one tag set")
    if not 0 < p < 1:
        raise FormatError(f"persistence must be in (0, 1), got {p}")
    length = len(a)
    seen_a: set[str] = set()
    seen_b: set[str] = set()
    overlap = 0
    weighted_sum = 0.0
    for depth in range(1, length + 1):
        ea, eb = a[depth - 1], b[depth - 1]
        if ea == eb:
            overlap += 1
        else:
            if ea in seen_b:
                overlap += 1
            if eb in seen_a:
                overlap += 1
            seen_a.add(ea)
            seen_b.add(eb)
        weighted_sum += overlap / depth * p**depth
    return (1 - p) / p * weighted_sum + overlap / length * p**length


def rank_correlations(
    a: SystemOrdering, b: SystemOrdering, rbo_p: float = DEFAULT_RBO_P
) -> CorrelationResult:
    """Kendall's tau-b, Spearman's rho, and extrapolated RBO between two
    orderings of the same systems."""
    tags = sorted(a.tags())
    if tags != sorted(b.tags()):
        raise FormatError("orderings cover different tag sets")
    if len(tags) < 2:
        raise InsufficientDataError("need >= 2 systems to correlate")
    x = [a.value(t) for t in tags]
    y = [b.value(t) for t in tags]
    tau = _kendall_tau_b(x, y)
    rho = _pearson(_average_ranks(x), _average_ranks(y))
    rbo = rbo_extrapolated(a.tags(), b.tags(), rbo_p)
    return CorrelationResult(tau=tau, rho=rho, rbo=rbo)


# ---------------------------------------------------------------------------
# rank deltas


def rank_delta(
    runs: Sequence[Run],
    combination_specs: Sequence[CombinationSpec],
    sets_per_topic: dict[TopicId, list[AnnotationSet]],
    official: AnnotationSet,
    metric: MetricId,
    opts: MetricOptions = MetricOptions(),
) -> RankDeltaReport:
    """Rank change of each system under every combination vs the official
    judgments (positive delta: the system degraded in rank)."""
    if len(runs) < 2:
        raise InsufficientDataError("rank delta needs >= 2 runs")
    from .metrics import compute_metric

    official_means = {
        run.tag: compute_metric(run, official, metric, opts).mean for run in runs
    }
    official_ranks = SystemOrdering.from_means(official_means).ranks()
    table = per_topic_table(runs, sets_per_topic, metric, opts)
    deltas: dict[str, list[int]] = {run.tag: [] for run in runs}
    for spec in combination_specs:
        ranks = SystemOrdering.from_means(means_for_spec(table, spec)).ranks()
        for tag in deltas:
            deltas[tag].append(ranks[tag] - official_ranks[tag])
    return RankDeltaReport(
        systems=[r.tag for r in runs], official_ranks=official_ranks, deltas=deltas
    )


# ---------------------------------------------------------------------------
# significance tests


def paired_t_test_bonferroni(
    per_topic_a: Sequence[float], per_topic_b: Sequence[float], m_comparisons: int = 1
) -> TTestResult:
    """Two-sided paired t-test with Bonferroni-adjusted p.

    Zero-variance differences are degenerate and reported non-significant
    rather than raised, so batch comparisons keep their row.
    """
    if len(per_topic_a) != len(per_topic_b):
        raise FormatError("paired samples must have equal length")
    n = len(per_topic_a)
    if n < 2:
        raise InsufficientDataError("paired t-test needs n >= 2")
    if m_comparisons < 1:
        raise FormatError("m_comparisons must be >= 1")
    diffs = [a - b for a, b in zip(per_topic_a, per_topic_b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0:
        return TTestResult(
            t_statistic=math.nan,
            raw_p=math.nan,
            adjusted_p=math.nan,
            significant=False,
            degenerate=True,
        )
    t_stat = mean / math.sqrt(var / n)
    raw_p = 2 * float(t_dist.sf(abs(t_stat), df=n - 1))
    adjusted = min(1.0, raw_p * m_comparisons)
    return TTestResult(
        t_statistic=t_stat,
        raw_p=raw_p,
        adjusted_p=adjusted,
        significant=adjusted < SIGNIFICANCE_LEVEL,
    )


def _wilcoxon_exact_p(doubled_ranks: list[int], w_plus_doubled: int) -> float:
    """Two-sided exact p over all sign assignments via tabulation.

    Ranks are doubled so tied (average) ranks stay integral. p is the mass
    at or below min(W+, W-) plus the mass at or above the mirrored value.
    """
    total = sum(doubled_ranks)
    counts: dict[int, int] = {0: 1}
    for rank in doubled_ranks:
        updated: dict[int, int] = defaultdict(int)
        for value, ways in counts.items():
            updated[value] += ways
            updated[value + rank] += ways
        counts = dict(updated)
    observed_min = min(w_plus_doubled, total - w_plus_doubled)
    n_assignments = 2 ** len(doubled_ranks)
    low_tail = sum(ways for value, ways in counts.items() if value <= observed_min)
    high_tail = sum(
        ways for value, ways in counts.items() if value >= total - observed_min
    )
    return min(1.0, (low_tail + high_tail) / n_assignments)


EXACT_WILCOXON_MAX_N = 20


def wilcoxon_signed_rank(
    ranks_a: Sequence[float], ranks_b: Sequence[float]
) -> WilcoxonResult:
    """Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; |differences| are ranked with average
    ranks for ties; W is the smaller signed-rank sum. The p-value is exact
    (full sign-assignment tabulation) for n <= 20 and a normal
    approximation with continuity correction beyond.
    """
    if len(ranks_a) != len(ranks_b):
        raise FormatError("paired samples must have equal length")
    diffs = [a - b for a, b in zip(ranks_a, ranks_b) if a != b]
    n = len(diffs)
    if n == 0:
        raise DegenerateError("all differences are zero")
    magnitudes = [abs(d) for d in diffs]
    ranks = _average_ranks([-m for m in magnitudes])  # ascending magnitude
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    w = min(w_plus, w_minus)
    if n <= EXACT_WILCOXON_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _wilcoxon_exact_p(doubled, int(round(2 * w_plus)))
    else:
        mu = n * (n + 1) / 4
        sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24)
        z = (w - mu + 0.5) / sigma
        p = min(1.0, 2 * NormalDist().cdf(z))
    return WilcoxonResult(w_statistic=w, p_value=p, n=n)


# ---------------------------------------------------------------------------
# CSV exports


def pair_category(category_a: str, category_b: str) -> str:
    return "-".join(sorted((category_a, category_b)))


def swap_scatter_csv(matrix: SwapMatrix, categories: dict[str, str]) -> str:
    """Scatter export: one row per system pair with mean |delta| and swap
    probability, labeled by the pair's category combination."""
    lines = ["system_a,system_b,pair_category,mean_abs_delta,swap_probability"]
    for i, tag_a in enumerate(matrix.systems):
        for j in range(i + 1, len(matrix.systems)):
            tag_b = matrix.systems[j]
            label = pair_category(
                categories.get(tag_a, "unknown"), categories.get(tag_b, "unknown")
            )
            lines.append(
                f"{tag_a},{tag_b},{label},"
                f"{matrix.mean_abs_delta(i, j):.6f},{matrix.swap_probability(i, j):.6f}"
            )
    return "\n".join(lines) + "\n"


def correlation_summary_csv(rows: list[tuple[str, CorrelationResult]]) -> str:
    lines = ["mode,tau,rho,rbo"]
    for mode, result in rows:
        lines.append(f"{mode},{result.tau:.6f},{result.rho:.6f},{result.rbo:.6f}")
    return "\n".join(lines) + "\n"


def _quantile(sorted_values: list[int], q: float) -> float:
    if not sorted_values:
        return 0.0
    position = q * (len(sorted_values) - 1)
    low = int(math.floor(position))
    high = int(math.ceil(position))
    if low == high:
        return float(sorted_values[low])
    weight = position - low
    return sorted_values[low] * (1 - weight) + sorted_values[high] * weight


def rank_delta_csv(report: RankDeltaReport) -> str:
    """Per-system delta quantiles with a Wilcoxon significance flag against
    the official rank."""
    lines = ["system,official_rank,mean_delta,min,q25,median,q75,max,wilcoxon_p,significant"]
    for tag in report.systems:
        values = sorted(report.deltas[tag])
        mean_delta = sum(values) / len(values)
        official = report.official_ranks[tag]
        combo_ranks = [official + d for d in values]
        try:
            result = wilcoxon_signed_rank(combo_ranks, [official] * len(values))
            p_text = f"{result.p_value:.6f}"
            significant = result.p_value < SIGNIFICANCE_LEVEL
        except DegenerateError:
            p_text = ""
            significant = False
        lines.append(
            f"{tag},{official},{mean_delta:.6f},"
            f"{_quantile(values, 0):.1f},{_quantile(values, 0.25):.1f},"
            f"{_quantile(values, 0.5):.1f},{_quantile(values, 0.75):.1f},"
            f"{_quantile(values, 1):.1f},{p_text},{str(significant).lower()}"
        )
    return "\n".join(lines) + "\n"
