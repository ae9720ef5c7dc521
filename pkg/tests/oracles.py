"""Independent reference implementations used only by tests.

Everything here is written as direct plain-Python transcriptions (explicit
loops, math.exp instead of numpy, log(x**-d) instead of -d*log(x)) so that
agreement with the library is a genuine dual-route check.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


def eq_chain_recommend(
    variant: str,
    bookmarks: list[tuple[list[float], list[str], int]],
    cue_vector: list[float],
    ref_time: int,
    resource_counts: dict[str, int],
    tag_order: dict[str, int],
    beta: float,
    k: int,
    d: float = 0.5,
) -> list[tuple[str, float]]:
    """Direct evaluation of the cue -> activation -> recency -> softmax -> mix chain."""
    num_topics = len(cue_vector)

    user_tags: list[str] = []
    for _, tags, _ in bookmarks:
        for tag in tags:
            if tag not in user_tags:
                user_tags.append(tag)

    activations = []
    for vec, _, _ in bookmarks:
        dot = sum(p * s for p, s in zip(cue_vector, vec))
        norm_p = math.sqrt(sum(p * p for p in cue_vector))
        norm_s = math.sqrt(sum(s * s for s in vec))
        sim = 0.0 if norm_p == 0.0 or norm_s == 0.0 else dot / (norm_p * norm_s)
        activations.append(sim * sim * sim)

    tag_last: dict[str, int] = {}
    topic_last: dict[int, int] = {}
    for vec, tags, ts in bookmarks:
        for tag in tags:
            if tag not in tag_last or ts > tag_last[tag]:
                tag_last[tag] = ts
        for z in range(num_topics):
            if vec[z] >= 1.0 / num_topics and (z not in topic_last or ts > topic_last[z]):
                topic_last[z] = ts

    def bll(delta: float) -> float:
        return math.log(max(delta, 1.0) ** (-d))

    scores: dict[str, float] = {}
    for tag in user_tags:
        total = 0.0
        for (vec, tags, ts), act in zip(bookmarks, activations):
            if tag not in tags:
                continue
            if variant == "3l":
                total += act
            elif variant == "3lt-topic":
                inner = 0.0
                for z, last in topic_last.items():
                    inner += vec[z] * bll(ref_time - last)
                total += inner * act
            elif variant == "3lt-tag":
                total += bll(ref_time - tag_last[tag]) * act
            else:
                raise ValueError(variant)
        scores[tag] = total

    union = sorted(set(user_tags) | set(resource_counts))
    if not union or k == 0:
        return []

    def softmax(raw: dict[str, float]) -> dict[str, float]:
        exps = {tag: math.exp(raw.get(tag, 0.0)) for tag in union}
        denom = sum(exps.values())
        return {tag: value / denom for tag, value in exps.items()}

    norm_memory = softmax(scores)
    norm_popularity = softmax({t: float(c) for t, c in resource_counts.items()})
    combined = {
        tag: beta * norm_memory[tag] + (1.0 - beta) * norm_popularity[tag] for tag in union
    }
    fallback = len(tag_order)
    ranked = sorted(combined.items(), key=lambda kv: (-kv[1], tag_order.get(kv[0], fallback), kv[0]))
    return ranked[:k]


def brute_precision_recall(predicted: list[str], true_tags: set[str], k: int) -> tuple[float, float]:
    hits = len([t for t in predicted[:k] if t in true_tags])
    if len(predicted) == 0:
        precision = 0.0
    else:
        precision = hits / min(k, len(predicted))
    return precision, hits / len(true_tags)


def brute_f1_at_5(predicted: list[str], true_tags: set[str]) -> float:
    p, r = brute_precision_recall(predicted, true_tags, 5)
    return 0.0 if p + r == 0.0 else 2 * p * r / (p + r)


def brute_mrr(predicted: list[str], true_tags: set[str], k: int = 10) -> float:
    reciprocal = [1.0 / (i + 1) for i, t in enumerate(predicted[:k]) if t in true_tags]
    return sum(reciprocal) / len(true_tags)


def brute_map(predicted: list[str], true_tags: set[str], k: int = 10) -> float:
    precisions = []
    for i, tag in enumerate(predicted[:k]):
        if tag in true_tags:
            hits_so_far = len([t for t in predicted[: i + 1] if t in true_tags])
            precisions.append(hits_so_far / (i + 1))
    return sum(precisions) / len(true_tags)


def brute_ranksum_exact_p(x: list[float], y: list[float]) -> float:
    """Exact two-sided rank-sum p by enumerating every group assignment."""
    pooled = list(x) + list(y)
    n1, n = len(x), len(pooled)
    # midranks
    ranks = [0.0] * n
    order = sorted(range(n), key=pooled.__getitem__)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        for idx in order[i : j + 1]:
            ranks[idx] = (i + j + 2) / 2.0
        i = j + 1
    observed = sum(ranks[:n1])
    mean = n1 * (n + 1) / 2.0
    extreme = total = 0
    for subset in combinations(range(n), n1):
        total += 1
        if abs(sum(ranks[idx] for idx in subset) - mean) >= abs(observed - mean) - 1e-12:
            extreme += 1
    return extreme / total


def dense_pagerank(
    adjacency: dict,
    nodes: list,
    preference: dict,
    damping: float,
    tol: float = 1e-6,
    max_iters: int = 100,
) -> dict:
    """Matrix-form power iteration used as the oracle for the dict version.

    Same iteration protocol (start at the normalized preference, stop on
    L1 < tol), independently realized with numpy matrices.
    """
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    weights = np.zeros((n, n))
    for node, nbrs in adjacency.items():
        for nbr, w in nbrs.items():
            weights[index[node], index[nbr]] = w
    degree = weights.sum(axis=1)
    transition = np.zeros_like(weights)
    for i in range(n):
        if degree[i] > 0:
            transition[i] = weights[i] / degree[i]
    pref = np.array([max(preference.get(node, 0.0), 0.0) for node in nodes])
    pref = pref / pref.sum() if pref.sum() > 0 else np.full(n, 1.0 / n)
    rank = pref.copy()
    for _ in range(max_iters):
        nxt = damping * (rank @ transition) + (1 - damping) * pref
        delta = np.abs(nxt - rank).sum()
        rank = nxt
        if delta < tol:
            break
    return {node: float(rank[index[node]]) for node in nodes}
