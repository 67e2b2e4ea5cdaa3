"""Pool multiple annotation sets into one via minimum, mean, or maximum.

Pairs absent from a set do not contribute an implicit grade 0: the operator
runs over the grades of the sets that actually judged the pair. This
matters for minimum pooling, where treating absence as non-relevance would
conflate sampling gaps with assessor opinion. Mean pooling keeps exact
fractional grades; no further quantization is applied.
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction

from .errors import InsufficientDataError
from .trec_io import AnnotationSet, GradeValue, as_grade_value


class AggregateOp(str, Enum):
    MINIMUM = "min"
    MEAN = "mean"
    MAXIMUM = "max"


def _combine(grades: list[GradeValue], op: AggregateOp) -> GradeValue:
    if op is AggregateOp.MINIMUM:
        return min(grades)
    if op is AggregateOp.MAXIMUM:
        return max(grades)
    return as_grade_value(Fraction(sum(Fraction(g) for g in grades), len(grades)))


def aggregate_judgments(
    sets: list[AnnotationSet], op: AggregateOp
) -> AnnotationSet:
    """Aggregate every (topic, doc) judged by at least one input set."""
    if not sets:
        raise InsufficientDataError("aggregation needs at least one input set")
    keys: set[tuple[str, str]] = set()
    for annotation_set in sets:
        keys.update(annotation_set.judgments)
    judgments: dict[tuple[str, str], GradeValue] = {}
    for key in keys:
        grades = [s.judgments[key] for s in sets if key in s.judgments]
        judgments[key] = _combine(grades, op)
    name = f"{op.value}({','.join(s.annotator for s in sets)})"
    return AnnotationSet(annotator=name, judgments=judgments, provenance="aggregate")
