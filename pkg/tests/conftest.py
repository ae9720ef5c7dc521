from __future__ import annotations

import random

import pytest

from folkrec.folksonomy import Folksonomy, Post
from folkrec.threelayers import MemoryRow, UserMemory


@pytest.fixture
def tiny_folksonomy() -> Folksonomy:
    """Two users, shared resources, enough structure for every baseline."""
    posts = [
        Post("alice", "r1", ("python", "web"), 100),
        Post("alice", "r2", ("python", "testing"), 200),
        Post("alice", "r3", ("web", "css"), 300),
        Post("bob", "r1", ("python", "flask"), 150),
        Post("bob", "r4", ("flask", "web"), 250),
        Post("carol", "r2", ("testing",), 400),
    ]
    return Folksonomy(posts)


def random_instance(rng: random.Random):
    """A random micro-instance for the equation-chain oracle.

    Returns (bookmarks, cue_vector, ref_time, resource_counts, train) where
    bookmarks are (topic_vector, tags, timestamp) triples with l <= 5 rows,
    m <= 6 user tags and Z <= 4 topics.
    """
    num_topics = rng.randint(2, 4)
    n_rows = rng.randint(0, 5)
    tag_pool = [f"t{i}" for i in range(6)]
    user = "u0"

    bookmarks = []
    train_posts = []
    ts = 0
    for i in range(n_rows):
        vec = [rng.random() for _ in range(num_topics)]
        if rng.random() < 0.15:
            vec = [0.0] * num_topics
        else:
            total = sum(vec)
            vec = [v / total for v in vec]
        n_tags = rng.randint(1, 4)
        tags = sorted(rng.sample(tag_pool, n_tags))
        ts += rng.randint(1, 100000)
        bookmarks.append((vec, tags, ts))
        train_posts.append(Post(user, f"own{i}", tuple(tags), ts))

    resource = "target"
    n_extra = rng.randint(0, 3)
    for j in range(n_extra):
        tags = tuple(sorted(rng.sample(tag_pool, rng.randint(1, 3))))
        train_posts.append(Post(f"other{j}", resource, tags, rng.randint(1, 1000)))
    if not train_posts:
        train_posts.append(Post("filler", "rf", ("t0",), 1))

    cue = [rng.random() for _ in range(num_topics)]
    if rng.random() < 0.1:
        cue = [0.0] * num_topics
    ref_time = ts + rng.randint(1, 500000)

    train = Folksonomy(train_posts)
    resource_counts = dict(train.resource_tags(resource))
    return bookmarks, cue, ref_time, resource_counts, resource, train


def memory_from_bookmarks(user: str, bookmarks, num_topics: int) -> UserMemory:
    """Build a UserMemory directly from raw rows (the library path does the
    same bookkeeping inside build_memory; tests construct it explicitly so the
    oracle's recomputation stays independent)."""
    import numpy as np

    memory = UserMemory(user=user, num_topics=num_topics)
    for vec, tags, ts in bookmarks:
        memory.rows.append(MemoryRow(topic_vector=np.array(vec, dtype=float), tags=tuple(tags), timestamp=ts))
        for tag in tags:
            memory.local_tag_ids.setdefault(tag, len(memory.local_tag_ids))
            if tag not in memory.tag_last_use or ts > memory.tag_last_use[tag]:
                memory.tag_last_use[tag] = ts
        for z in range(num_topics):
            if vec[z] >= 1.0 / num_topics:
                if z not in memory.topic_last_use or ts > memory.topic_last_use[z]:
                    memory.topic_last_use[z] = ts
    return memory
