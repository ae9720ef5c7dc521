"""Ranking metrics, the leave-one-out benchmark loop, rank-sum significance
tests, and the gist-vs-verbatim similarity drift analysis."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .errors import ConfigError
from .folksonomy import SECONDS_PER_DAY, DatasetSplit, Folksonomy, Post, filter_test_users
from .threelayers import RankedTags, cosine
from .topics import TopicModel, resource_vector

WORKERS_ENV = "FOLKREC_WORKERS"

# Metric variant choices that the source material leaves open; recorded in
# every report so numbers are never compared across variants silently.
METRIC_NOTES = {
    "mrr_variant": "sum of reciprocal ranks of all held-out tags found in the top 10, divided by the number of held-out tags",
    "map_variant": "sum of precision at each hit position in the top 10, divided by the number of held-out tags",
    "precision_denominator": "min(k, number of returned tags)",
    "paper_scale_comparable": False,
}


@dataclass
class EvalCase:
    """One held-out post together with the ranked prediction for it."""

    user: str
    resource: str
    true_tags: frozenset[str]
    predicted: RankedTags

    def __post_init__(self) -> None:
        if not self.true_tags:
            raise ConfigError(f"case ({self.user}, {self.resource}) has no held-out tags")


def precision_recall_at_k(case: EvalCase, k: int, strict: bool = False) -> tuple[float, float]:
    """Precision and recall of the top-k prediction against the held-out tags.

    Precision divides by min(k, returned) unless strict, which divides by k.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    top = [tag for tag, _ in case.predicted[:k]]
    hits = sum(1 for tag in top if tag in case.true_tags)
    if not case.predicted:
        precision = 0.0
    else:
        precision = hits / (k if strict else min(k, len(case.predicted)))
    recall = hits / len(case.true_tags)
    return precision, recall


def f1_at_5(case: EvalCase, strict: bool = False) -> float:
    p, r = precision_recall_at_k(case, 5, strict=strict)
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def mrr(case: EvalCase, k: int = 10) -> float:
    """Mean reciprocal rank of all held-out tags found in the top-k."""
    total = 0.0
    for rank, (tag, _) in enumerate(case.predicted[:k], start=1):
        if tag in case.true_tags:
            total += 1.0 / rank
    return total / len(case.true_tags)


def map_at_10(case: EvalCase, k: int = 10) -> float:
    """Average precision over hit positions in the top-k, per held-out tag."""
    total = 0.0
    hits = 0
    for rank, (tag, _) in enumerate(case.predicted[:k], start=1):
        if tag in case.true_tags:
            hits += 1
            total += hits / rank
    return total / len(case.true_tags)


@dataclass
class AlgorithmResult:
    """Aggregated metrics for one algorithm over all evaluated cases."""

    name: str
    n_cases: int
    n_failures: int
    f1_at_5: float
    mrr: float
    map_at_10: float
    precision_at: list[float]
    recall_at: list[float]
    per_case: dict[str, list[float]] = field(default_factory=dict, repr=False)


@dataclass
class EvalReport:
    """Per-algorithm metric table plus pairwise significance and provenance."""

    algorithms: dict[str, AlgorithmResult]
    pairwise_p: dict[str, dict[str, float]]
    fingerprint: str
    config: dict
    notes: dict = field(default_factory=lambda: dict(METRIC_NOTES))

    def to_json(self) -> str:
        payload = {
            "fingerprint": self.fingerprint,
            "config": self.config,
            "notes": self.notes,
            "algorithms": {
                name: {
                    "n_cases": res.n_cases,
                    "n_failures": res.n_failures,
                    "f1_at_5": res.f1_at_5,
                    "mrr": res.mrr,
                    "map_at_10": res.map_at_10,
                    "precision_at": res.precision_at,
                    "recall_at": res.recall_at,
                }
                for name, res in sorted(self.algorithms.items())
            },
            "pairwise_p": self.pairwise_p,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def summary_tsv(self) -> str:
        lines = [
            f"# fingerprint={self.fingerprint}",
            f"# config={json.dumps(self.config, sort_keys=True)}",
            "algorithm\tn_cases\tn_failures\tf1_at_5\tmrr\tmap_at_10",
        ]
        for name, res in sorted(self.algorithms.items()):
            lines.append(
                f"{name}\t{res.n_cases}\t{res.n_failures}"
                f"\t{res.f1_at_5:.10g}\t{res.mrr:.10g}\t{res.map_at_10:.10g}"
            )
        return "\n".join(lines) + "\n"

    def curves_tsv(self) -> str:
        lines = [
            f"# fingerprint={self.fingerprint}",
            "algorithm\tk\tprecision\trecall",
        ]
        for name, res in sorted(self.algorithms.items()):
            for i, (p, r) in enumerate(zip(res.precision_at, res.recall_at), start=1):
                lines.append(f"{name}\t{i}\t{p:.10g}\t{r:.10g}")
        return "\n".join(lines) + "\n"


Recommender = Callable[[str, str, int], RankedTags]


def evaluate(
    algorithms: dict[str, Recommender],
    split: DatasetSplit,
    b_min: int | None = None,
    k_max: int = 10,
    significance: bool = True,
    config: dict | None = None,
    workers: int | None = None,
) -> EvalReport:
    """Run every algorithm on every held-out post and aggregate the metrics.

    Recommenders are called as fn(user, resource, ref_time) and never see the
    held-out tags. A recommender raising on a case is recorded as an empty
    prediction and counted under n_failures. Cases are reduced in sorted
    (user, resource) order so results are bitwise reproducible; predictions
    may be computed by FOLKREC_WORKERS threads.
    """
    test_posts = split.test if b_min is None else filter_test_users(split, b_min)
    test_posts = sorted(test_posts, key=lambda p: (p.user, p.resource))
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))

    results: dict[str, AlgorithmResult] = {}
    for name in sorted(algorithms):
        fn = algorithms[name]
        predictions, failures = _predict_all(fn, test_posts, workers)
        cases = [
            EvalCase(post.user, post.resource, frozenset(post.tags), pred)
            for post, pred in zip(test_posts, predictions)
        ]
        per_case = {
            "f1_at_5": [f1_at_5(c) for c in cases],
            "mrr": [mrr(c) for c in cases],
            "map_at_10": [map_at_10(c) for c in cases],
        }
        precision_at, recall_at = [], []
        for k in range(1, k_max + 1):
            pairs = [precision_recall_at_k(c, k) for c in cases]
            precision_at.append(_mean([p for p, _ in pairs]))
            recall_at.append(_mean([r for _, r in pairs]))
        results[name] = AlgorithmResult(
            name=name,
            n_cases=len(cases),
            n_failures=failures,
            f1_at_5=_mean(per_case["f1_at_5"]),
            mrr=_mean(per_case["mrr"]),
            map_at_10=_mean(per_case["map_at_10"]),
            precision_at=precision_at,
            recall_at=recall_at,
            per_case=per_case,
        )

    pairwise: dict[str, dict[str, float]] = {}
    if significance and len(results) > 1:
        for metric in ("f1_at_5", "mrr", "map_at_10"):
            table: dict[str, float] = {}
            for a, b in combinations(sorted(results), 2):
                table[f"{a}|{b}"] = wilcoxon_rank_sum(
                    results[a].per_case[metric], results[b].per_case[metric]
                )
            pairwise[metric] = table

    return EvalReport(
        algorithms=results,
        pairwise_p=pairwise,
        fingerprint=split.train.fingerprint(),
        config=config or {},
    )


def _predict_all(
    fn: Recommender, posts: list[Post], workers: int
) -> tuple[list[RankedTags], int]:
    def call(post: Post) -> RankedTags | None:
        try:
            return fn(post.user, post.resource, post.timestamp)
        except Exception:
            return None

    if workers > 1 and len(posts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(call, posts))
    else:
        raw = [call(post) for post in posts]
    failures = sum(1 for r in raw if r is None)
    return [r if r is not None else [] for r in raw], failures


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def significance_stars(p: float) -> str:
    """Star notation at the usual alpha levels .05 / .01 / .001."""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j + 2) / 2.0
        for idx in order[i : j + 1]:
            ranks[idx] = mid
        i = j + 1
    return ranks


def wilcoxon_rank_sum(x: list[float], y: list[float]) -> float:
    """Two-sided rank-sum p-value.

    Exact enumeration over all rank assignments when len(x)+len(y) <= 12,
    otherwise a normal approximation with tie and continuity corrections.
    Midranks handle ties in both branches.
    """
    n1, n2 = len(x), len(y)
    if n1 < 1 or n2 < 1:
        raise ConfigError("both samples must be non-empty")
    pooled = list(x) + list(y)
    ranks = _midranks(pooled)
    n = n1 + n2
    observed = sum(ranks[:n1])
    mean = n1 * (n + 1) / 2.0

    if n <= 12:
        deviation = abs(observed - mean) - 1e-12
        extreme = 0
        total = 0
        for subset in combinations(range(n), n1):
            total += 1
            stat = sum(ranks[i] for i in subset)
            if abs(stat - mean) >= deviation:
                extreme += 1
        return extreme / total

    tie_sizes: dict[float, int] = {}
    for r in ranks:
        tie_sizes[r] = tie_sizes.get(r, 0) + 1
    tie_term = sum(t**3 - t for t in tie_sizes.values())
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0.0:
        return 1.0
    z = max(abs(observed - mean) - 0.5, 0.0) / math.sqrt(variance)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


@dataclass
class DriftRow:
    lag: int
    mean_gist: float
    mean_verbatim: float
    n_users: int


@dataclass
class DriftTable:
    """Similarity-vs-lag curves, bucketed by bookmark index and by whole days."""

    by_bookmark: list[DriftRow]
    by_days: list[DriftRow]

    def to_tsv(self, which: str, fingerprint: str | None = None) -> str:
        rows = self.by_bookmark if which == "bookmark" else self.by_days
        lines = [f"# lag_unit={which}"]
        if fingerprint is not None:
            lines.insert(0, f"# fingerprint={fingerprint}")
        lines.append("lag\tmean_gist_sim\tmean_verbatim_sim\tn_users")
        for row in rows:
            lines.append(
                f"{row.lag}\t{row.mean_gist:.10g}\t{row.mean_verbatim:.10g}\t{row.n_users}"
            )
        return "\n".join(lines) + "\n"


def drift_analysis(f: Folksonomy, model: TopicModel, max_lag: int = 100) -> DriftTable:
    """Compare each user's most recent post against their past posts.

    Every post is described by a gist vector (the resource's topic mixture)
    and a verbatim vector (binary tag vector over the dataset vocabulary).
    Cosine similarities against the most recent post are bucketed by bookmark
    lag (1 = previous post, up to max_lag) and, for the same pairs, by whole
    days between the posts; buckets are averaged within users first, then
    across users. Users with fewer than two posts are skipped.
    """
    if max_lag < 1:
        raise ConfigError(f"max_lag must be >= 1, got {max_lag}")
    bookmark_buckets: dict[int, list[float]] = {}
    day_buckets: dict[int, list[float]] = {}
    bookmark_gist: dict[int, list[float]] = {}
    day_gist: dict[int, list[float]] = {}

    theta_cache: dict[str, np.ndarray] = {}

    def gist_vector(resource: str) -> np.ndarray:
        vec = theta_cache.get(resource)
        if vec is None:
            vec = resource_vector(model, f, resource)
            theta_cache[resource] = vec
        return vec

    for user in sorted(f.user_vocab):
        posts = f.user_index[user]
        if len(posts) < 2:
            continue
        recent = max(posts, key=lambda p: (p.timestamp, f.resource_vocab[p.resource]))
        earlier = sorted(
            (p for p in posts if p is not recent),
            key=lambda p: (p.timestamp, f.resource_vocab[p.resource]),
            reverse=True,
        )
        recent_gist = gist_vector(recent.resource)
        recent_tags = set(recent.tags)

        user_day_sims: dict[int, list[tuple[float, float]]] = {}
        for lag, past in enumerate(earlier, start=1):
            if lag > max_lag:
                break
            g = cosine(recent_gist, gist_vector(past.resource))
            v = _binary_cosine(recent_tags, set(past.tags))
            bookmark_buckets.setdefault(lag, []).append(v)
            bookmark_gist.setdefault(lag, []).append(g)
            day_lag = (recent.timestamp - past.timestamp) // SECONDS_PER_DAY
            user_day_sims.setdefault(int(day_lag), []).append((g, v))
        for day_lag, pairs in user_day_sims.items():
            day_gist.setdefault(day_lag, []).append(_mean([g for g, _ in pairs]))
            day_buckets.setdefault(day_lag, []).append(_mean([v for _, v in pairs]))

    by_bookmark = [
        DriftRow(lag, _mean(bookmark_gist[lag]), _mean(bookmark_buckets[lag]), len(bookmark_buckets[lag]))
        for lag in sorted(bookmark_buckets)
    ]
    by_days = [
        DriftRow(lag, _mean(day_gist[lag]), _mean(day_buckets[lag]), len(day_buckets[lag]))
        for lag in sorted(day_buckets)
    ]
    return DriftTable(by_bookmark=by_bookmark, by_days=by_days)


def _binary_cosine(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))
