"""Independent brute-force oracles the test suite checks the package against.

Everything here is written straight from the defining formulas with plain
loops, deliberately sharing no code with the package.
"""

from __future__ import annotations

import itertools
import math


# -- ranking metrics ----------------------------------------------------------


def bf_dcg(gains: list[float], k: int) -> float:
    total = 0.0
    for i in range(min(k, len(gains))):
        total += gains[i] / math.log2(i + 2)
    return total


def bf_ndcg(ranked_grades: list[float], all_judged_grades: list[float], k: int,
            exponential: bool = False) -> float:
    def gain(g: float) -> float:
        return (2.0**g - 1.0) if exponential else g

    ideal = sorted((gain(g) for g in all_judged_grades), reverse=True)
    idcg = bf_dcg(ideal, k)
    if idcg <= 0:
        return 0.0
    return bf_dcg([gain(g) for g in ranked_grades], k) / idcg


def bf_precision(ranked_relevant: list[bool], k: int) -> float:
    return sum(ranked_relevant[:k]) / k


def bf_mrr(ranked_relevant: list[bool], k: int) -> float:
    for i, rel in enumerate(ranked_relevant[:k], start=1):
        if rel:
            return 1.0 / i
    return 0.0


def bf_recall(ranked_relevant: list[bool], k: int, n_relevant: int) -> float:
    return sum(ranked_relevant[:k]) / n_relevant


# -- agreement ----------------------------------------------------------------


def bf_cohen_kappa(labels_a: list[int], labels_b: list[int]) -> float:
    n = len(labels_a)
    categories = sorted(set(labels_a) | set(labels_b))
    table = {(i, j): 0 for i in categories for j in categories}
    for a, b in zip(labels_a, labels_b):
        table[(a, b)] += 1
    p_o = sum(table[(c, c)] for c in categories) / n
    p_e = 0.0
    for c in categories:
        row = sum(table[(c, j)] for j in categories) / n
        col = sum(table[(i, c)] for i in categories) / n
        p_e += row * col
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def bf_fleiss_kappa(ratings: list[list[int]], n_categories: int) -> float:
    """ratings: per item, the list of labels the r raters assigned."""
    n = len(ratings)
    r = len(ratings[0])
    p_i_sum = 0.0
    category_totals = [0] * n_categories
    for labels in ratings:
        counts = [0] * n_categories
        for label in labels:
            counts[label] += 1
            category_totals[label] += 1
        p_i_sum += sum(c * (c - 1) for c in counts) / (r * (r - 1))
    p_bar = p_i_sum / n
    p_e = sum((t / (n * r)) ** 2 for t in category_totals)
    if p_e == 1.0:
        return 1.0
    return (p_bar - p_e) / (1.0 - p_e)


# -- rank statistics ----------------------------------------------------------


def bf_kendall_tau_b(x: list[float], y: list[float]) -> float:
    n = len(x)
    concordant = discordant = 0
    for i, j in itertools.combinations(range(n), 2):
        product = (x[i] - x[j]) * (y[i] - y[j])
        if product > 0:
            concordant += 1
        elif product < 0:
            discordant += 1
    n0 = n * (n - 1) / 2

    def tie_pairs(values: list[float]) -> float:
        total = 0
        for v in set(values):
            t = values.count(v)
            total += t * (t - 1) / 2
        return total

    denom = math.sqrt((n0 - tie_pairs(x)) * (n0 - tie_pairs(y)))
    return (concordant - discordant) / denom


def bf_average_ranks(values: list[float]) -> list[float]:
    ranks = []
    for v in values:
        smaller = sum(1 for w in values if w > v)
        equal = sum(1 for w in values if w == v)
        ranks.append(smaller + (equal + 1) / 2)
    return ranks


def bf_spearman_rho(x: list[float], y: list[float]) -> float:
    rx, ry = bf_average_ranks(x), bf_average_ranks(y)
    n = len(x)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def bf_rbo_ext(a: list[str], b: list[str], p: float) -> float:
    length = len(a)
    total = 0.0
    for d in range(1, length + 1):
        x_d = len(set(a[:d]) & set(b[:d]))
        total += x_d / d * p**d
    x_l = len(set(a) & set(b))
    return (1 - p) / p * total + x_l / length * p**length


# -- significance tests --------------------------------------------------------


def bf_wilcoxon_exact(diffs: list[float]) -> tuple[float, float]:
    """Exhaustive 2^n enumeration of sign assignments.

    Returns (W, p) with W the smaller signed-rank sum and p the two-sided
    exact probability mass at least as extreme as W.
    """
    nonzero = [d for d in diffs if d != 0]
    n = len(nonzero)
    ranks = bf_average_ranks([-abs(d) for d in nonzero])  # ascending |d|
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    total = sum(ranks)
    w_min = min(w_plus, total - w_plus)
    extreme = 0
    for signs in itertools.product([0, 1], repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if w <= w_min + 1e-12 or w >= total - w_min - 1e-12:
            extreme += 1
    return w_min, min(1.0, extreme / 2**n)


def bf_paired_t(a: list[float], b: list[float]) -> float:
    """The t statistic only; the CDF is checked against scipy separately."""
    n = len(a)
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    return mean / math.sqrt(var / n)
