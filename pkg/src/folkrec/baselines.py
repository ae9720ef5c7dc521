"""Reference recommenders: popularity family, LDA, CF, graph ranking, and the
two time-dependent baselines.

All rankings are deterministic: ties break by ascending global tag id. Mixing
of two score components always goes through the softmax/mix helpers of the
`threelayers` module so every algorithm normalizes identically.
"""

from __future__ import annotations

import math
import statistics

from .errors import ConfigError
from .folksonomy import Folksonomy
from .threelayers import RankedTags, mix_scores, rank_tags, softmax_over
from .topics import TopicModel, resource_vector

# The exponential reuse model below follows the shape of its published
# description (first/last usage, exponential decay) but is a documented
# stand-in, not the canonical formulation; reports must carry this flag.
GIRPTM_STANDIN = True

PAGERANK_DAMPING = 0.7
PAGERANK_TOL = 1e-6
PAGERANK_MAX_ITERS = 100


def mp(train: Folksonomy, k: int | None = None) -> RankedTags:
    """Most popular tags over all tag assignments."""
    raw = {t: float(c) for t, c in train.tag_freq.items()}
    return rank_tags(raw, train.tag_vocab, k)


def mp_u(train: Folksonomy, user: str, k: int | None = None) -> RankedTags:
    """Most frequent tags in the user's own assignments; empty profile -> empty."""
    raw = {t: float(c) for t, c in train.user_tags(user).items()}
    return rank_tags(raw, train.tag_vocab, k)


def mp_r(train: Folksonomy, resource: str, k: int | None = None) -> RankedTags:
    """Most frequent tags previously assigned to the resource."""
    raw = {t: float(c) for t, c in train.resource_tags(resource).items()}
    return rank_tags(raw, train.tag_vocab, k)


def mp_ur(
    train: Folksonomy, user: str, resource: str, beta: float = 0.5, k: int | None = None
) -> RankedTags:
    """Mix of user-profile and resource-profile tag frequencies."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must be in [0, 1], got {beta}")
    user_freq = {t: float(c) for t, c in train.user_tags(user).items()}
    res_freq = {t: float(c) for t, c in train.resource_tags(resource).items()}
    candidates = sorted(set(user_freq) | set(res_freq))
    if not candidates:
        return []
    combined = mix_scores(
        softmax_over(user_freq, candidates), softmax_over(res_freq, candidates), beta
    )
    return rank_tags(combined, train.tag_vocab, k)


def lda_rec(
    model: TopicModel, train: Folksonomy, user: str, resource: str, k: int | None = None
) -> RankedTags:
    """Rank tags by their probability under the resource's topic mixture."""
    theta = resource_vector(model, train, resource)
    scores = theta @ model.phi
    raw = {tag: float(scores[i]) for i, tag in enumerate(model.tags)}
    return rank_tags(raw, train.tag_vocab, k)


def cf(
    train: Folksonomy,
    user: str,
    resource: str,
    k_neighbors: int = 20,
    k: int | None = None,
) -> RankedTags:
    """User-based collaborative filtering over tag-frequency profiles.

    The neighborhood is the k_neighbors most cosine-similar users; candidates
    are the tags those neighbors assigned to the target resource. When no
    neighbor tagged it, neighbors vote with their global tag frequencies
    instead (needed for narrow folksonomies).
    """
    if k_neighbors < 1:
        raise ConfigError(f"k_neighbors must be >= 1, got {k_neighbors}")
    profile = train.user_tags(user)
    if not profile:
        return mp_r(train, resource, k)

    similarities = []
    for other in sorted(train.user_vocab):
        if other == user:
            continue
        sim = _profile_cosine(profile, train.user_tags(other))
        similarities.append((other, sim))
    similarities.sort(key=lambda item: (-item[1], item[0]))
    neighborhood = similarities[:k_neighbors]

    scores: dict[str, float] = {}
    for other, sim in neighborhood:
        if sim <= 0.0:
            continue
        post = train.post_by_key.get((other, resource))
        if post is None:
            continue
        for tag in post.tags:
            scores[tag] = scores.get(tag, 0.0) + sim

    if not scores:
        for other, sim in neighborhood:
            if sim <= 0.0:
                continue
            for tag, freq in train.user_tags(other).items():
                scores[tag] = scores.get(tag, 0.0) + sim * freq

    return rank_tags(scores, train.tag_vocab, k)


def _profile_cosine(a: dict[str, int], b: dict[str, int]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(c * b[t] for t, c in a.items() if t in b)
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(c * c for c in a.values()))
    norm_b = math.sqrt(sum(c * c for c in b.values()))
    return dot / (norm_a * norm_b)


class FolkGraph:
    """Undirected tripartite graph of users, resources and tags.

    Edge weights are co-occurrence counts over tag assignments: each (user,
    resource, tag) assignment adds 1 to the user-tag, resource-tag and
    user-resource edges. Nodes are namespaced tuples ("u"|"r"|"t", id).
    """

    def __init__(self, train: Folksonomy):
        self.adjacency: dict[tuple[str, str], dict[tuple[str, str], float]] = {}
        for post in train.posts:
            u = ("u", post.user)
            r = ("r", post.resource)
            for tag in post.tags:
                t = ("t", tag)
                self._add_edge(u, t, 1.0)
                self._add_edge(r, t, 1.0)
                self._add_edge(u, r, 1.0)
        self.nodes = sorted(self.adjacency)
        self.degree = {node: sum(nbrs.values()) for node, nbrs in self.adjacency.items()}
        self._baseline: dict[tuple[str, str], float] | None = None

    def _add_edge(self, a: tuple[str, str], b: tuple[str, str], w: float) -> None:
        self.adjacency.setdefault(a, {})
        self.adjacency.setdefault(b, {})
        self.adjacency[a][b] = self.adjacency[a].get(b, 0.0) + w
        self.adjacency[b][a] = self.adjacency[b].get(a, 0.0) + w

    def __contains__(self, node: tuple[str, str]) -> bool:
        return node in self.adjacency

    def baseline_rank(self) -> dict[tuple[str, str], float]:
        """PageRank under the uniform preference vector; cached."""
        if self._baseline is None:
            uniform = {node: 1.0 for node in self.nodes}
            self._baseline = pagerank_rank(self, uniform)
        return self._baseline


def pagerank_rank(
    graph: FolkGraph,
    preference: dict[tuple[str, str], float],
    damping: float = PAGERANK_DAMPING,
    tol: float = PAGERANK_TOL,
    max_iters: int = PAGERANK_MAX_ITERS,
) -> dict[tuple[str, str], float]:
    """Power iteration on the row-stochastic transition of the folksonomy graph.

    rank <- damping * rank @ T + (1 - damping) * preference, iterated until the
    L1 change drops below tol. The preference vector is normalized to sum 1;
    dangling mass is redistributed along the preference.
    """
    nodes = graph.nodes
    if not nodes:
        return {}
    pref_total = sum(max(preference.get(node, 0.0), 0.0) for node in nodes)
    if pref_total <= 0.0:
        pref = {node: 1.0 / len(nodes) for node in nodes}
    else:
        pref = {node: max(preference.get(node, 0.0), 0.0) / pref_total for node in nodes}

    rank = dict(pref)
    for _ in range(max_iters):
        nxt = {node: 0.0 for node in nodes}
        dangling = 0.0
        for node in nodes:
            mass = rank[node]
            if mass == 0.0:
                continue
            deg = graph.degree[node]
            if deg == 0.0:
                dangling += mass
                continue
            for nbr, w in graph.adjacency[node].items():
                nxt[nbr] += mass * w / deg
        for node in nodes:
            nxt[node] = damping * (nxt[node] + dangling * pref[node]) + (1.0 - damping) * pref[node]
        delta = sum(abs(nxt[node] - rank[node]) for node in nodes)
        rank = nxt
        if delta < tol:
            break
    return rank


def _query_preference(
    graph: FolkGraph, user: str, resource: str, boost: float = 0.5
) -> dict[tuple[str, str], float] | None:
    """Uniform base preference plus boost mass on the query nodes; None if both absent."""
    pref = {node: 1.0 / len(graph.nodes) for node in graph.nodes}
    present = False
    for node in (("u", user), ("r", resource)):
        if node in graph:
            pref[node] += boost
            present = True
    return pref if present else None


def _tag_ranking(
    weights: dict[tuple[str, str], float], train: Folksonomy, k: int | None
) -> RankedTags:
    raw = {node[1]: w for node, w in weights.items() if node[0] == "t"}
    return rank_tags(raw, train.tag_vocab, k)


def apr(
    train: Folksonomy,
    user: str,
    resource: str,
    k: int | None = None,
    graph: FolkGraph | None = None,
) -> RankedTags:
    """Adapted PageRank: rank tags by PageRank with the query nodes boosted."""
    graph = graph or FolkGraph(train)
    pref = _query_preference(graph, user, resource)
    if pref is None:
        return mp(train, k)
    return _tag_ranking(pagerank_rank(graph, pref), train, k)


def folkrank(
    train: Folksonomy,
    user: str,
    resource: str,
    k: int | None = None,
    graph: FolkGraph | None = None,
) -> RankedTags:
    """Differential PageRank: personalized weights minus uniform-preference weights."""
    graph = graph or FolkGraph(train)
    pref = _query_preference(graph, user, resource)
    if pref is None:
        return mp(train, k)
    personalized = pagerank_rank(graph, pref)
    baseline = graph.baseline_rank()
    diff = {node: personalized[node] - baseline[node] for node in graph.nodes}
    return _tag_ranking(diff, train, k)


def bll_c(
    train: Folksonomy,
    user: str,
    resource: str,
    ref_time: int,
    d: float = 0.5,
    beta: float = 0.5,
    k: int | None = None,
) -> RankedTags:
    """Base-level activation over all of the user's tag usages, mixed with
    the resource's tag popularity.

    raw(t) = ln(sum_i (ref_time - t_i)^-d) over the user's usages of t, with
    each lag clamped to >= 1 second. Tags the user never used get no
    activation slot and surface only through the popularity component.
    """
    usages: dict[str, list[int]] = {}
    for post in train.user_index.get(user, []):
        for tag in post.tags:
            usages.setdefault(tag, []).append(post.timestamp)
    raw = {
        tag: math.log(sum(max(ref_time - ts, 1.0) ** (-d) for ts in stamps))
        for tag, stamps in usages.items()
    }
    return _mix_with_popularity(raw, train, resource, beta, k)


def girptm(
    train: Folksonomy,
    user: str,
    resource: str,
    ref_time: int,
    beta: float = 0.5,
    k: int | None = None,
) -> RankedTags:
    """Stand-in exponential reuse model from first/last usage times (see GIRPTM_STANDIN).

    raw(t) = freq(t) * exp(-(ref_time - t_last)/lam) / (1 + exp(-(t_last - t_first)/lam))
    with lam the median gap between the user's consecutive posts.
    """
    posts = train.user_index.get(user, [])
    stamps = sorted(p.timestamp for p in posts)
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    lam = max(statistics.median(gaps), 1.0) if gaps else 1.0

    first: dict[str, int] = {}
    last: dict[str, int] = {}
    freq: dict[str, int] = {}
    for post in posts:
        for tag in post.tags:
            freq[tag] = freq.get(tag, 0) + 1
            if tag not in first or post.timestamp < first[tag]:
                first[tag] = post.timestamp
            if tag not in last or post.timestamp > last[tag]:
                last[tag] = post.timestamp
    raw = {
        tag: freq[tag]
        * math.exp(-(ref_time - last[tag]) / lam)
        / (1.0 + math.exp(-(last[tag] - first[tag]) / lam))
        for tag in freq
    }
    return _mix_with_popularity(raw, train, resource, beta, k)


def _mix_with_popularity(
    raw_user: dict[str, float], train: Folksonomy, resource: str, beta: float, k: int | None
) -> RankedTags:
    """Softmax the user component over its own tags, the popularity component
    over the union, then mix; tags outside the user component keep 0 there."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must be in [0, 1], got {beta}")
    resource_freq = {t: float(c) for t, c in train.resource_tags(resource).items()}
    candidates = sorted(set(raw_user) | set(resource_freq))
    if not candidates:
        return []
    user_component = softmax_over(raw_user, sorted(raw_user)) if raw_user else {}
    popularity_component = softmax_over(resource_freq, candidates)
    combined = mix_scores(user_component, popularity_component, beta)
    return rank_tags(combined, train.tag_vocab, k)
