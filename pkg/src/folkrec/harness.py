"""Wiring between the data model, topic model and recommenders: builds the
callable table that the evaluation loop and the CLI consume."""

from __future__ import annotations

from functools import lru_cache

from . import baselines, threelayers
from .errors import ConfigError, FingerprintMismatchError
from .folksonomy import DatasetSplit, Folksonomy
from .threelayers import Cue, RankedTags
from .topics import TopicModel, resource_vector

ALGORITHMS = (
    "mp",
    "mp-u",
    "mp-r",
    "mp-ur",
    "lda",
    "cf",
    "apr",
    "folkrank",
    "bllc",
    "girptm",
    "3l",
    "3lt-topic",
    "3lt-tag",
)

# Benchmarked in the source material through an external factorization
# framework; reported as "n/a" rather than reimplemented.
UNIMPLEMENTED = ("fm", "pitf")


class RecommenderSet:
    """Lazily shares expensive structures (graph, memories) across algorithms."""

    def __init__(
        self,
        train: Folksonomy,
        model: TopicModel | None,
        beta: float = 0.5,
        d: float = 0.5,
        k: int = 10,
        k_neighbors: int = 20,
        topic_threshold: float | None = None,
    ):
        self.train = train
        self.model = model
        self.beta = beta
        self.d = d
        self.k = k
        self.k_neighbors = k_neighbors
        self.topic_threshold = topic_threshold
        self._graph: baselines.FolkGraph | None = None
        self._memory = lru_cache(maxsize=None)(self._build_memory)
        self._cue_vector = lru_cache(maxsize=None)(self._build_cue_vector)

    def _require_model(self, name: str) -> TopicModel:
        if self.model is None:
            raise ConfigError(f"algorithm {name!r} needs a topic model; pass --model")
        return self.model

    @property
    def graph(self) -> baselines.FolkGraph:
        if self._graph is None:
            self._graph = baselines.FolkGraph(self.train)
        return self._graph

    def _build_memory(self, user: str) -> threelayers.UserMemory:
        return threelayers.build_memory(
            user, self.train, self._require_model("3l"), self.topic_threshold
        )

    def _build_cue_vector(self, resource: str):
        return resource_vector(self._require_model("3l"), self.train, resource)

    def recommender(self, name: str):
        """fn(user, resource, ref_time) -> RankedTags for the named algorithm."""
        train, k = self.train, self.k

        if name == "mp":
            return lambda user, resource, ref_time: baselines.mp(train, k)
        if name == "mp-u":
            return lambda user, resource, ref_time: baselines.mp_u(train, user, k)
        if name == "mp-r":
            return lambda user, resource, ref_time: baselines.mp_r(train, resource, k)
        if name == "mp-ur":
            return lambda user, resource, ref_time: baselines.mp_ur(train, user, resource, self.beta, k)
        if name == "lda":
            model = self._require_model(name)
            return lambda user, resource, ref_time: baselines.lda_rec(model, train, user, resource, k)
        if name == "cf":
            return lambda user, resource, ref_time: baselines.cf(train, user, resource, self.k_neighbors, k)
        if name == "apr":
            return lambda user, resource, ref_time: baselines.apr(train, user, resource, k, self.graph)
        if name == "folkrank":
            return lambda user, resource, ref_time: baselines.folkrank(train, user, resource, k, self.graph)
        if name == "bllc":
            return lambda user, resource, ref_time: baselines.bll_c(train, user, resource, ref_time, self.d, self.beta, k)
        if name == "girptm":
            return lambda user, resource, ref_time: baselines.girptm(train, user, resource, ref_time, self.beta, k)
        if name in threelayers.VARIANTS:
            self._require_model(name)

            def run(user: str, resource: str, ref_time: int, variant: str = name) -> RankedTags:
                memory = self._memory(user)
                cue = Cue(topic_vector=self._cue_vector(resource), ref_time=ref_time)
                return threelayers.recommend(variant, memory, cue, resource, train, self.beta, k, self.d)

            return run
        raise ConfigError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")

    def table(self, names: list[str]):
        return {name: self.recommender(name) for name in names}


def check_model_fingerprint(model: TopicModel, split: DatasetSplit) -> str:
    """Verify the model was trained on this split's training data (or on the
    full dataset, for paper-mode models). Returns which one matched."""
    train_fp = split.train.fingerprint()
    if model.trained_on == train_fp:
        return "train"
    full = Folksonomy(split.train.posts + list(split.test))
    if model.trained_on == full.fingerprint():
        return "full"
    raise FingerprintMismatchError(
        f"model was trained on dataset {model.trained_on}, expected {train_fp} (train) "
        f"or {full.fingerprint()} (train+test)"
    )
