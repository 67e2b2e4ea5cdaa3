"""Synthetic data generator for the desk-scale shelf-life experiment.

Builds a ground-truth judgment set, a spectrum of synthetic rankers whose
quality degrades with a per-system noise level, and grade-confusion
perturbations standing in for disagreeing annotators.
"""

from __future__ import annotations

import random

from shelflife.trec_io import AnnotationSet, Run

from helpers import make_run, make_set

GRADE_WEIGHTS = [45, 25, 22, 8]  # heavier mass on low grades, like real pools


def make_ground_truth(n_topics: int, docs_per_topic: int, seed: int) -> AnnotationSet:
    rng = random.Random(f"truth|{seed}")
    judgments = {}
    for t in range(n_topics):
        for d in range(docs_per_topic):
            grade = rng.choices(range(4), weights=GRADE_WEIGHTS)[0]
            judgments[(f"t{t:02d}", f"d{d:03d}")] = grade
    return make_set(judgments, annotator="truth")


def make_system_spectrum(
    ground_truth: AnnotationSet, n_systems: int, seed: int
) -> list[Run]:
    """Rankers ordered from near-ideal to noisy.

    System i ranks docs by (grade + gaussian noise with sd growing in i), so
    mean effectiveness decreases roughly monotonically across systems.
    """
    runs = []
    topics = ground_truth.topics()
    for i in range(n_systems):
        sigma = 0.15 + 1.8 * i / max(1, n_systems - 1)
        rng = random.Random(f"system|{seed}|{i}")
        rankings = {}
        for topic in topics:
            judged = ground_truth.by_topic(topic)
            scored = sorted(
                judged,
                key=lambda doc: -(judged[doc] + rng.gauss(0.0, sigma)),
            )
            rankings[topic] = scored
        runs.append(make_run(f"sys{i:02d}", rankings))
    return runs


def perturb_with_grade_confusion(
    ground_truth: AnnotationSet, noise: float, annotator: str, seed: int
) -> AnnotationSet:
    """Flip each grade to a uniformly random different grade with prob noise."""
    rng = random.Random(f"annotator|{seed}|{annotator}|{noise}")
    judgments = {}
    for key, grade in ground_truth.judgments.items():
        if noise > 0 and rng.random() < noise:
            others = [g for g in range(4) if g != grade]
            judgments[key] = rng.choice(others)
        else:
            judgments[key] = grade
    return make_set(judgments, annotator=annotator, provenance="secondary")
