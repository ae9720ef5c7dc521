"""Memory-based tag recommenders over a semantic and a lexical matrix.

A user's history is laid out as paired rows: a topic vector per bookmark
(semantic matrix) and a binary tag vector per bookmark (lexical matrix). A
query resource's topic vector acts as a retrieval cue; bookmark activations
are propagated to the tags and optionally damped by a recency term derived
from base-level learning. Variants:

    3l         activation only
    3lt-topic  recency applied per topic, inside the bookmark loop
    3lt-tag    recency applied per tag

Final scores mix the softmax-normalized tag activations with the softmax-
normalized tag frequencies of the target resource.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .folksonomy import Folksonomy
from .topics import TopicModel, resource_vector

VARIANTS = ("3l", "3lt-topic", "3lt-tag")

DEFAULT_DECAY = 0.5
DEFAULT_BETA = 0.5

RankedTags = list[tuple[str, float]]


@dataclass
class MemoryRow:
    """One bookmark in the hidden layer: its topic vector, tags and timestamp."""

    topic_vector: np.ndarray
    tags: tuple[str, ...]
    timestamp: int


@dataclass
class UserMemory:
    """A user's personomy as chronologically ordered matrix rows plus recency indices."""

    user: str
    num_topics: int
    rows: list[MemoryRow] = field(default_factory=list)
    local_tag_ids: dict[str, int] = field(default_factory=dict)
    tag_last_use: dict[str, int] = field(default_factory=dict)
    topic_last_use: dict[int, int] = field(default_factory=dict)

    @property
    def n_bookmarks(self) -> int:
        return len(self.rows)

    @property
    def n_tags(self) -> int:
        return len(self.local_tag_ids)

    def tags_in_order(self) -> list[str]:
        ordered = [""] * len(self.local_tag_ids)
        for tag, j in self.local_tag_ids.items():
            ordered[j] = tag
        return ordered


@dataclass
class Cue:
    """Input-layer representation of the query: topic vector and reference time."""

    topic_vector: np.ndarray
    ref_time: int


def build_memory(
    user: str,
    train: Folksonomy,
    model: TopicModel,
    topic_threshold: float | None = None,
) -> UserMemory:
    """Assemble a user's memory from their training posts.

    A topic counts as "occurring" in a bookmark when its mass is at least
    `topic_threshold` (default 1/Z, i.e. above-uniform); the threshold feeds
    the per-topic recency index.
    """
    num_topics = model.num_topics
    threshold = 1.0 / num_topics if topic_threshold is None else topic_threshold
    memory = UserMemory(user=user, num_topics=num_topics)
    for post in train.user_index.get(user, []):
        topic_vector = resource_vector(model, train, post.resource)
        memory.rows.append(MemoryRow(topic_vector=topic_vector, tags=post.tags, timestamp=post.timestamp))
        for tag in post.tags:
            memory.local_tag_ids.setdefault(tag, len(memory.local_tag_ids))
            prev = memory.tag_last_use.get(tag)
            if prev is None or post.timestamp > prev:
                memory.tag_last_use[tag] = post.timestamp
        for k in range(num_topics):
            if topic_vector[k] >= threshold:
                prev = memory.topic_last_use.get(k)
                if prev is None or post.timestamp > prev:
                    memory.topic_last_use[k] = post.timestamp
    return memory


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    norm = math.sqrt(float(a @ a)) * math.sqrt(float(b @ b))
    if norm == 0.0:
        return 0.0
    return float(a @ b) / norm


def cue_similarity(cue_vector: np.ndarray, memory: UserMemory) -> np.ndarray:
    """Cosine of the cue against every semantic-matrix row."""
    return np.array([cosine(cue_vector, row.topic_vector) for row in memory.rows])


def activation(similarities: np.ndarray) -> np.ndarray:
    """Cube the similarities to damp weakly matching bookmarks."""
    return similarities**3


def base_level(delta_seconds: float, d: float = DEFAULT_DECAY) -> float:
    """Recency weight ln(delta^-d) with delta clamped to >= 1 second."""
    return -d * math.log(max(delta_seconds, 1.0))


def score_3l(memory: UserMemory, cue: Cue) -> np.ndarray:
    """Tag activations: sum of bookmark activations over each tag's bookmarks."""
    scores = np.zeros(memory.n_tags)
    acts = activation(cue_similarity(cue.topic_vector, memory))
    for row, a in zip(memory.rows, acts):
        for tag in row.tags:
            scores[memory.local_tag_ids[tag]] += a
    return scores


def score_3lt_topic(memory: UserMemory, cue: Cue, d: float = DEFAULT_DECAY) -> np.ndarray:
    """3l with a per-bookmark recency factor summed over the bookmark's topics.

    Topics without a recorded occurrence contribute nothing to the inner sum.
    """
    scores = np.zeros(memory.n_tags)
    acts = activation(cue_similarity(cue.topic_vector, memory))
    bll_by_topic = {
        k: base_level(cue.ref_time - last, d) for k, last in memory.topic_last_use.items()
    }
    for row, a in zip(memory.rows, acts):
        inner = 0.0
        for k, bll in bll_by_topic.items():
            inner += float(row.topic_vector[k]) * bll
        for tag in row.tags:
            scores[memory.local_tag_ids[tag]] += inner * a
    return scores


def score_3lt_tag(memory: UserMemory, cue: Cue, d: float = DEFAULT_DECAY) -> np.ndarray:
    """3l with each tag's contribution weighted by that tag's own recency."""
    scores = np.zeros(memory.n_tags)
    acts = activation(cue_similarity(cue.topic_vector, memory))
    for row, a in zip(memory.rows, acts):
        for tag in row.tags:
            bll = base_level(cue.ref_time - memory.tag_last_use[tag], d)
            scores[memory.local_tag_ids[tag]] += bll * a
    return scores


def softmax_normalize(scores: np.ndarray) -> np.ndarray:
    """exp(c_j) / sum_i exp(c_i), computed with max-subtraction for stability."""
    if scores.size == 0:
        return scores.copy()
    shifted = scores - np.max(scores)
    exps = np.exp(shifted)
    return exps / exps.sum()


def softmax_over(raw: dict[str, float], candidates: list[str]) -> dict[str, float]:
    """Softmax over a fixed candidate list; absent entries enter with raw score 0."""
    vec = np.array([raw.get(tag, 0.0) for tag in candidates], dtype=float)
    normalized = softmax_normalize(vec)
    return {tag: float(p) for tag, p in zip(candidates, normalized)}


def mix_scores(a: dict[str, float], b: dict[str, float], beta: float) -> dict[str, float]:
    """beta * a + (1 - beta) * b over the union of keys (missing entries are 0)."""
    keys = sorted(set(a) | set(b))
    return {t: beta * a.get(t, 0.0) + (1.0 - beta) * b.get(t, 0.0) for t in keys}


def rank_tags(scores: dict[str, float], tag_ids: dict[str, int], k: int | None = None) -> RankedTags:
    """Order tags by descending score, breaking ties by ascending global tag id."""
    fallback = len(tag_ids)
    ordered = sorted(scores.items(), key=lambda item: (-item[1], tag_ids.get(item[0], fallback), item[0]))
    if k is not None:
        ordered = ordered[:k]
    return [(tag, float(score)) for tag, score in ordered]


def recommend(
    variant: str,
    memory: UserMemory,
    cue: Cue,
    resource: str,
    train: Folksonomy,
    beta: float = DEFAULT_BETA,
    k: int = 10,
    d: float = DEFAULT_DECAY,
) -> RankedTags:
    """Top-k tags for (user, resource): memory activations mixed with resource popularity.

    Both components are softmax-normalized over the union of the user's tags
    and the resource's training tags before mixing with weight beta.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must be in [0, 1], got {beta}")
    if k == 0:
        return []

    resource_freq = train.resource_tags(resource)
    candidates = sorted(set(memory.local_tag_ids) | set(resource_freq))
    if not candidates:
        return []

    if variant == "3l":
        raw_vec = score_3l(memory, cue)
    elif variant == "3lt-topic":
        raw_vec = score_3lt_topic(memory, cue, d)
    else:
        raw_vec = score_3lt_tag(memory, cue, d)
    raw = {tag: float(raw_vec[j]) for tag, j in memory.local_tag_ids.items()}

    memory_component = softmax_over(raw, candidates)
    popularity_component = softmax_over({t: float(c) for t, c in resource_freq.items()}, candidates)
    combined = mix_scores(memory_component, popularity_component, beta)
    return rank_tags(combined, train.tag_vocab, k)
