"""Inter-annotator agreement statistics.

Overlap (binary Jaccard and mean per-grade Jaccard), Cohen's kappa,
Fleiss' kappa, grade-ratio tables, and grade-transition matrices. All
statistics are computed over co-judged pairs only: a (topic, doc) counts
for a statistic iff every annotator involved in that statistic judged it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations as iter_pairs

from .errors import (
    FormatError,
    InsufficientDataError,
    DegenerateError,
    ShapeError,
    UndefinedAgreementError,
)
from .trec_io import AnnotationSet, GRADE_MAX, GRADE_MIN

N_GRADES = GRADE_MAX - GRADE_MIN + 1


@dataclass
class AgreementReport:
    """Agreement over one annotator group (Fleiss is None for < 3 raters
    unless requested; pairwise statistics are unweighted means over pairs)."""

    group: str
    fleiss_4: float | None
    fleiss_2: float | None
    overlap_4: float
    overlap_2: float
    cohen_4: float
    cohen_2: float
    n_items: int
    n_topics: int


@dataclass
class TransitionMatrix:
    """counts[i][j]: co-judged events with primary grade i, secondary grade j."""

    counts: list[list[int]]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass
class GradeRatio:
    ratios: tuple[float, float, float, float]
    total: int


def _co_judged(a: AnnotationSet, b: AnnotationSet) -> list[tuple[int, int]]:
    """Grade pairs over the (topic, doc) keys judged by both; integer only."""
    keys = a.judgments.keys() & b.judgments.keys()
    pairs = []
    for key in keys:
        ga, gb = a.judgments[key], b.judgments[key]
        if not isinstance(ga, int) or not isinstance(gb, int):
            raise FormatError("agreement statistics require integer grades")
        pairs.append((ga, gb))
    return pairs


def overlap(
    a: AnnotationSet, b: AnnotationSet, binary_threshold: float | None = None
) -> float:
    """Agreement as common judgments over total judgments.

    Binary mode (threshold given): Jaccard of the relevant sets among
    co-judged pairs. Graded mode: mean per-grade Jaccard over grades 1..3,
    skipping grades neither annotator used.
    """
    keys = a.judgments.keys() & b.judgments.keys()
    if not keys:
        raise UndefinedAgreementError(
            f"{a.annotator!r} and {b.annotator!r} co-judged nothing"
        )
    if binary_threshold is not None:
        rel_a = {k for k in keys if float(a.judgments[k]) >= binary_threshold}
        rel_b = {k for k in keys if float(b.judgments[k]) >= binary_threshold}
        union = rel_a | rel_b
        if not union:
            raise UndefinedAgreementError("no relevant docs under either annotator")
        return len(rel_a & rel_b) / len(union)
    jaccards = []
    for grade in range(1, N_GRADES):
        set_a = {k for k in keys if a.judgments[k] == grade}
        set_b = {k for k in keys if b.judgments[k] == grade}
        union = set_a | set_b
        if not union:
            continue
        jaccards.append(len(set_a & set_b) / len(union))
    if not jaccards:
        raise UndefinedAgreementError("no positive grades under either annotator")
    return sum(jaccards) / len(jaccards)


def _categorize(grade: int, binary_threshold: float | None) -> int:
    if binary_threshold is None:
        return grade
    return int(grade >= binary_threshold)


def cohen_kappa(
    a: AnnotationSet, b: AnnotationSet, binary_threshold: float | None = None
) -> float:
    """Cohen's kappa over co-judged pairs.

    kappa = (p_o - p_e) / (1 - p_e), with p_o the exact-match proportion and
    p_e the chance agreement from the product of the two annotators' marginal
    category distributions. 4-grade by default; binarized when a threshold is
    given.
    """
    pairs = _co_judged(a, b)
    if len(pairs) < 2:
        raise InsufficientDataError(
            f"need >= 2 co-judged pairs, got {len(pairs)}"
        )
    n = len(pairs)
    categories = range(2) if binary_threshold is not None else range(N_GRADES)
    cat_pairs = [
        (_categorize(ga, binary_threshold), _categorize(gb, binary_threshold))
        for ga, gb in pairs
    ]
    p_o = sum(1 for ca, cb in cat_pairs if ca == cb) / n
    p_e = sum(
        (sum(1 for ca, _ in cat_pairs if ca == c) / n)
        * (sum(1 for _, cb in cat_pairs if cb == c) / n)
        for c in categories
    )
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def fleiss_kappa(items: list[list[int]]) -> float:
    """Fleiss' kappa from per-item category counts.

    Every item must carry the same total rater count r >= 2. Per-item
    agreement P_i = (sum_c n_ic (n_ic - 1)) / (r (r - 1)); chance agreement
    is the sum of squared pooled category proportions.
    """
    if not items:
        raise InsufficientDataError("no rated items")
    r = sum(items[0])
    if r < 2:
        raise InsufficientDataError(f"need >= 2 raters, got {r}")
    n_categories = len(items[0])
    for i, counts in enumerate(items):
        if len(counts) != n_categories:
            raise ShapeError(f"item {i} has {len(counts)} categories, expected {n_categories}")
        if sum(counts) != r:
            raise ShapeError(f"item {i} has {sum(counts)} ratings, expected {r}")
    n = len(items)
    p_bar = sum(
        (sum(c * c for c in counts) - r) / (r * (r - 1)) for counts in items
    ) / n
    totals = [sum(counts[c] for counts in items) for c in range(n_categories)]
    p_e = sum((t / (n * r)) ** 2 for t in totals)
    if p_e == 1.0:
        if p_bar == 1.0:
            return 1.0
        raise DegenerateError("chance agreement is 1 but observed agreement is not")
    return (p_bar - p_e) / (1.0 - p_e)


def fleiss_items(
    sets: list[AnnotationSet], binary_threshold: float | None = None
) -> list[list[int]]:
    """Per-item category counts over (topic, doc) pairs judged by all sets."""
    if not sets:
        raise InsufficientDataError("no annotation sets")
    keys = set(sets[0].judgments)
    for other in sets[1:]:
        keys &= other.judgments.keys()
    n_categories = 2 if binary_threshold is not None else N_GRADES
    items = []
    for key in sorted(keys):
        counts = [0] * n_categories
        for annotation_set in sets:
            grade = annotation_set.judgments[key]
            if not isinstance(grade, int):
                raise FormatError("agreement statistics require integer grades")
            counts[_categorize(grade, binary_threshold)] += 1
        items.append(counts)
    return items


def transition_matrix(
    primary: AnnotationSet, secondary: list[AnnotationSet]
) -> TransitionMatrix:
    """Grade transitions from primary to each secondary annotator.

    Each secondary annotator contributes one event per pair it co-judged
    with the primary.
    """
    counts = [[0] * N_GRADES for _ in range(N_GRADES)]
    total = 0
    for annotation_set in secondary:
        for key in primary.judgments.keys() & annotation_set.judgments.keys():
            gp, gs = primary.judgments[key], annotation_set.judgments[key]
            if not isinstance(gp, int) or not isinstance(gs, int):
                raise FormatError("transition matrix requires integer grades")
            counts[gp][gs] += 1
            total += 1
    if total == 0:
        warnings.warn("no co-judged pairs; transition matrix is empty", stacklevel=2)
    return TransitionMatrix(counts=counts)


def grade_ratios(annotation_set: AnnotationSet) -> GradeRatio:
    """Share of each grade 0..3 over all judgments in the set."""
    if not annotation_set.judgments:
        raise InsufficientDataError("empty annotation set")
    counts = [0] * N_GRADES
    for grade in annotation_set.judgments.values():
        if not isinstance(grade, int):
            raise FormatError("grade ratios require integer grades")
        counts[grade] += 1
    total = len(annotation_set.judgments)
    return GradeRatio(ratios=tuple(c / total for c in counts), total=total)


def agreement_report(
    sets: list[AnnotationSet], group: str, binary_threshold: float = 1.0
) -> AgreementReport:
    """Group-level agreement: Fleiss over items judged by every member,
    overlap/Cohen as unweighted means over annotator pairs."""
    if len(sets) < 2:
        raise InsufficientDataError("agreement needs >= 2 annotators")
    items_4 = fleiss_items(sets)
    items_2 = fleiss_items(sets, binary_threshold)
    fleiss_4 = fleiss_kappa(items_4) if items_4 else None
    fleiss_2 = fleiss_kappa(items_2) if items_2 else None
    pairs = list(iter_pairs(sets, 2))
    overlap_4 = sum(overlap(a, b) for a, b in pairs) / len(pairs)
    overlap_2 = sum(overlap(a, b, binary_threshold) for a, b in pairs) / len(pairs)
    cohen_4 = sum(cohen_kappa(a, b) for a, b in pairs) / len(pairs)
    cohen_2 = sum(cohen_kappa(a, b, binary_threshold) for a, b in pairs) / len(pairs)
    co_keys = set(sets[0].judgments)
    for other in sets[1:]:
        co_keys &= other.judgments.keys()
    return AgreementReport(
        group=group,
        fleiss_4=fleiss_4,
        fleiss_2=fleiss_2,
        overlap_4=overlap_4,
        overlap_2=overlap_2,
        cohen_4=cohen_4,
        cohen_2=cohen_2,
        n_items=len(co_keys),
        n_topics=len({t for t, _ in co_keys}),
    )


# ---------------------------------------------------------------------------
# CSV exports


def agreement_table_csv(reports: list[AgreementReport]) -> str:
    lines = ["group,fleiss_4,fleiss_2,overlap_4,overlap_2,cohen_4,cohen_2,n_items,n_topics"]
    for r in reports:
        fleiss_4 = "" if r.fleiss_4 is None else f"{r.fleiss_4:.6f}"
        fleiss_2 = "" if r.fleiss_2 is None else f"{r.fleiss_2:.6f}"
        lines.append(
            f"{r.group},{fleiss_4},{fleiss_2},{r.overlap_4:.6f},{r.overlap_2:.6f},"
            f"{r.cohen_4:.6f},{r.cohen_2:.6f},{r.n_items},{r.n_topics}"
        )
    return "\n".join(lines) + "\n"


def grade_ratio_csv(rows: list[tuple[str, GradeRatio]]) -> str:
    lines = ["annotators,grade_0,grade_1,grade_2,grade_3,total"]
    for label, ratio in rows:
        formatted = ",".join(f"{v:.6f}" for v in ratio.ratios)
        lines.append(f"{label},{formatted},{ratio.total}")
    return "\n".join(lines) + "\n"


def transition_csv(matrix: TransitionMatrix) -> str:
    lines = ["primary_grade," + ",".join(f"secondary_{j}" for j in range(N_GRADES))]
    for i, row in enumerate(matrix.counts):
        lines.append(f"{i}," + ",".join(str(c) for c in row))
    return "\n".join(lines) + "\n"
