"""Synthetic corpora: a planted-topic corpus for topic-recovery checks and a
lexical-drift corpus (stable topics, sliding tag vocabulary) used as the
bundled benchmark fixture."""

from __future__ import annotations

import random

import numpy as np

from .folksonomy import Folksonomy, Post
from .topics import TopicModel

FIXTURE_NAME = "drift_fixture.tsv"

# 2010-01-01T00:00:00Z
EPOCH_2010 = 1262304000


def planted_corpus(
    num_docs: int = 100,
    num_topics: int = 2,
    tags_per_topic: int = 10,
    posts_per_doc: int = 3,
    tags_per_post: int = 5,
    seed: int = 7,
) -> tuple[Folksonomy, dict[str, int]]:
    """Documents drawn from disjoint per-topic tag vocabularies.

    Each resource gets `posts_per_doc` posts from distinct synthetic users so
    its document is a genuine tag multiset. Returns the folksonomy and the
    planted topic label of every resource.
    """
    rng = random.Random(seed)
    vocab = [[f"k{z}tag{i:02d}" for i in range(tags_per_topic)] for z in range(num_topics)]
    posts = []
    labels: dict[str, int] = {}
    for d in range(num_docs):
        topic = d % num_topics
        resource = f"doc{d:03d}"
        labels[resource] = topic
        for j in range(posts_per_doc):
            tags = tuple(sorted(rng.sample(vocab[topic], tags_per_post)))
            posts.append(
                Post(
                    user=f"annotator{d:03d}x{j}",
                    resource=resource,
                    tags=tags,
                    timestamp=EPOCH_2010 + d * 1000 + j,
                )
            )
    return Folksonomy(posts), labels


def topic_purity(model: TopicModel, labels: dict[str, int]) -> float:
    """Fraction of documents whose argmax topic maps to their planted label
    under the best one-to-one topic matching (exhaustive over permutations)."""
    from itertools import permutations

    assigned = {r: int(np.argmax(model.theta_for(r))) for r in labels if model.theta_for(r) is not None}
    if not assigned:
        return 0.0
    planted = sorted(set(labels.values()))
    learned = range(model.num_topics)
    best = 0
    for perm in permutations(learned, len(planted)):
        mapping = dict(zip(planted, perm))
        best = max(best, sum(1 for r, z in assigned.items() if mapping[labels[r]] == z))
    return best / len(assigned)


def drift_rows(
    groups: int = 2,
    users_per_group: int = 2,
    steps: int = 56,
    window: int = 6,
    cadence: int = 86400,
    final_gap: int = 600,
) -> list[tuple[str, str, str, int]]:
    """TAS rows for the lexical-drift corpus.

    Every user posts once per `cadence` seconds, except that the last post
    follows the previous one after only `final_gap` seconds (a closing
    two-bookmark session). The tags of step i are a window [i, i+window)
    over the user's group tag pool, so consecutive posts share most tags
    while distant posts share none; the group pool keeps the topic stable
    throughout. Resources are per-user (narrow folksonomy), so a user's
    held-out resource carries no foreign tags. Fully deterministic.
    """
    rows = []
    for g in range(groups):
        for u in range(users_per_group):
            user = f"g{g}u{u}"
            base = EPOCH_2010 + (g * users_per_group + u) * 3600
            for i in range(steps):
                resource = f"{user}r{i:02d}"
                if i == steps - 1:
                    timestamp = base + (i - 1) * cadence + final_gap
                else:
                    timestamp = base + i * cadence
                for j in range(i, i + window):
                    rows.append((user, resource, f"g{g}t{j:02d}", timestamp))
    return rows


def drift_corpus(**kwargs) -> Folksonomy:
    """The lexical-drift corpus as an indexed folksonomy."""
    grouped: dict[tuple[str, str], tuple[set[str], int]] = {}
    for user, resource, tag, ts in drift_rows(**kwargs):
        tags, _ = grouped.setdefault((user, resource), (set(), ts))
        tags.add(tag)
    posts = [
        Post(user=user, resource=resource, tags=tuple(sorted(tags)), timestamp=ts)
        for (user, resource), (tags, ts) in grouped.items()
    ]
    return Folksonomy(posts)


def write_drift_fixture(path: str, **kwargs) -> None:
    """Write the drift corpus in canonical TAS snapshot form."""
    drift_corpus(**kwargs).save(path)
