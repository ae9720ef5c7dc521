"""Latent topic features via LDA with collapsed Gibbs sampling.

Documents are resources; the words of a document are all tags assigned to the
resource across training posts. Training is deterministic for a given
(corpus, config): documents are processed in sorted-resource order, tokens in
sorted-tag order, and a single seeded RNG stream drives every draw.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, MissingInputError
from .folksonomy import Folksonomy

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class LdaConfig:
    """Hyperparameters for collapsed Gibbs LDA.

    alpha defaults to 50/num_topics and eta to 0.01 when left unset.
    """

    num_topics: int
    alpha: float | None = None
    eta: float = 0.01
    iterations: int = 1000
    seed: int = 0
    infer_sweeps: int = 50

    def __post_init__(self) -> None:
        if self.num_topics < 2:
            raise ConfigError(f"num_topics must be >= 2, got {self.num_topics}")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.infer_sweeps < 1:
            raise ConfigError(f"infer_sweeps must be >= 1, got {self.infer_sweeps}")

    @property
    def resolved_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.num_topics

    def to_dict(self) -> dict:
        return {
            "num_topics": self.num_topics,
            "alpha": self.resolved_alpha,
            "eta": self.eta,
            "iterations": self.iterations,
            "seed": self.seed,
            "infer_sweeps": self.infer_sweeps,
        }


class TopicModel:
    """Trained LDA state: per-resource topic mixtures and per-topic tag mixtures."""

    def __init__(
        self,
        config: LdaConfig,
        resources: list[str],
        theta: np.ndarray,
        tags: list[str],
        phi: np.ndarray,
        trained_on: str,
        ll_trace: list[tuple[int, float]] | None = None,
    ):
        self.config = config
        self.resources = resources
        self.theta = theta
        self.tags = tags
        self.phi = phi
        self.trained_on = trained_on
        self.ll_trace = ll_trace or []
        self.resource_ids = {r: i for i, r in enumerate(resources)}
        self.tag_ids = {t: i for i, t in enumerate(tags)}

    @property
    def num_topics(self) -> int:
        return self.config.num_topics

    def theta_for(self, resource: str) -> np.ndarray | None:
        idx = self.resource_ids.get(resource)
        return None if idx is None else self.theta[idx]

    def uniform(self) -> np.ndarray:
        return np.full(self.num_topics, 1.0 / self.num_topics)

    def save(self, path: str) -> None:
        payload = {
            "version": SNAPSHOT_VERSION,
            "config": self.config.to_dict(),
            "trained_on": self.trained_on,
            "resources": self.resources,
            "tags": self.tags,
            "theta": [[float(x) for x in row] for row in self.theta],
            "phi": [[float(x) for x in row] for row in self.phi],
            "ll_trace": [[int(s), float(v)] for s, v in self.ll_trace],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "TopicModel":
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except FileNotFoundError:
            raise MissingInputError(f"model snapshot not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not a valid model snapshot: {exc}") from None
        if payload.get("version") != SNAPSHOT_VERSION:
            raise DataError(f"{path}: unsupported snapshot version {payload.get('version')!r}")
        cfg = payload["config"]
        config = LdaConfig(
            num_topics=cfg["num_topics"],
            alpha=cfg["alpha"],
            eta=cfg["eta"],
            iterations=cfg["iterations"],
            seed=cfg["seed"],
            infer_sweeps=cfg["infer_sweeps"],
        )
        return cls(
            config=config,
            resources=payload["resources"],
            theta=np.array(payload["theta"], dtype=float),
            tags=payload["tags"],
            phi=np.array(payload["phi"], dtype=float),
            trained_on=payload["trained_on"],
            ll_trace=[(int(s), float(v)) for s, v in payload["ll_trace"]],
        )


def _build_documents(train: Folksonomy) -> tuple[list[str], list[list[str]]]:
    docs: dict[str, list[str]] = {}
    for post in train.posts:
        docs.setdefault(post.resource, []).extend(post.tags)
    resources = sorted(docs)
    empty = [r for r in resources if not docs[r]]
    if empty:
        logger.warning("excluding %d resources with zero tags from LDA training", len(empty))
        resources = [r for r in resources if docs[r]]
    return resources, [sorted(docs[r]) for r in resources]


def train_lda(train: Folksonomy, config: LdaConfig, ll_every: int = 0) -> TopicModel:
    """Run collapsed Gibbs sampling and return the smoothed theta/phi estimates.

    theta[d][z] = (n_dz + alpha) / (n_d + Z*alpha)
    phi[z][t]  = (n_zt + eta)   / (n_z + V*eta)

    With ll_every > 0 the in-sample token log-likelihood is recorded every
    that many sweeps into the model's ll_trace.
    """
    if not train.posts:
        raise DataError("cannot train LDA on an empty folksonomy")
    resources, documents = _build_documents(train)
    tags = sorted({t for doc in documents for t in doc})
    tag_ids = {t: i for i, t in enumerate(tags)}

    num_topics = config.num_topics
    alpha = config.resolved_alpha
    eta = config.eta
    vocab_size = len(tags)
    eta_total = eta * vocab_size

    doc_of: list[int] = []
    word_of: list[int] = []
    for d, doc in enumerate(documents):
        for tag in doc:
            doc_of.append(d)
            word_of.append(tag_ids[tag])

    rng = random.Random(config.seed)
    n_tokens = len(doc_of)
    assignments = [rng.randrange(num_topics) for _ in range(n_tokens)]

    n_dz = [[0] * num_topics for _ in range(len(documents))]
    n_zt = [[0] * num_topics for _ in range(vocab_size)]
    n_z = [0] * num_topics
    for i in range(n_tokens):
        z = assignments[i]
        n_dz[doc_of[i]][z] += 1
        n_zt[word_of[i]][z] += 1
        n_z[z] += 1

    weights = [0.0] * num_topics
    ll_trace: list[tuple[int, float]] = []
    for sweep in range(config.iterations):
        for i in range(n_tokens):
            d = doc_of[i]
            t = word_of[i]
            z = assignments[i]
            row_d = n_dz[d]
            row_t = n_zt[t]
            row_d[z] -= 1
            row_t[z] -= 1
            n_z[z] -= 1
            total = 0.0
            for kk in range(num_topics):
                w = (row_d[kk] + alpha) * (row_t[kk] + eta) / (n_z[kk] + eta_total)
                weights[kk] = w
                total += w
            draw = rng.random() * total
            acc = 0.0
            z = num_topics - 1
            for kk in range(num_topics):
                acc += weights[kk]
                if draw < acc:
                    z = kk
                    break
            assignments[i] = z
            row_d[z] += 1
            row_t[z] += 1
            n_z[z] += 1
        if ll_every and (sweep + 1) % ll_every == 0:
            ll_trace.append((sweep + 1, _counts_log_likelihood(n_dz, n_zt, n_z, doc_of, word_of, alpha, eta, eta_total, num_topics)))

    doc_lengths = [len(doc) for doc in documents]
    theta = np.empty((len(documents), num_topics))
    for d in range(len(documents)):
        denom = doc_lengths[d] + num_topics * alpha
        for z in range(num_topics):
            theta[d, z] = (n_dz[d][z] + alpha) / denom
    phi = np.empty((num_topics, vocab_size))
    for z in range(num_topics):
        denom = n_z[z] + eta_total
        for t in range(vocab_size):
            phi[z, t] = (n_zt[t][z] + eta) / denom

    return TopicModel(
        config=config,
        resources=resources,
        theta=theta,
        tags=tags,
        phi=phi,
        trained_on=train.fingerprint(),
        ll_trace=ll_trace,
    )


def _counts_log_likelihood(n_dz, n_zt, n_z, doc_of, word_of, alpha, eta, eta_total, num_topics) -> float:
    doc_totals: dict[int, int] = {}
    for d in doc_of:
        doc_totals[d] = doc_totals.get(d, 0) + 1
    ll = 0.0
    for i in range(len(doc_of)):
        d = doc_of[i]
        t = word_of[i]
        denom_d = doc_totals[d] + num_topics * alpha
        p = 0.0
        for z in range(num_topics):
            p += (n_dz[d][z] + alpha) / denom_d * (n_zt[t][z] + eta) / (n_z[z] + eta_total)
        ll += math.log(p)
    return ll


def infer_topics(model: TopicModel, tags: list[str], sweeps: int | None = None) -> np.ndarray:
    """Fold a tag multiset into the trained model with phi frozen.

    Out-of-vocabulary tags are skipped; an empty or all-OOV input yields the
    uniform topic vector.
    """
    token_ids = sorted(model.tag_ids[t] for t in tags if t in model.tag_ids)
    num_topics = model.num_topics
    if not token_ids:
        return model.uniform()
    sweeps = model.config.infer_sweeps if sweeps is None else sweeps
    alpha = model.config.resolved_alpha
    phi = model.phi

    rng = random.Random(model.config.seed * 1000003 + 17)
    assignments = [rng.randrange(num_topics) for _ in token_ids]
    counts = [0] * num_topics
    for z in assignments:
        counts[z] += 1

    weights = [0.0] * num_topics
    for _ in range(sweeps):
        for i, t in enumerate(token_ids):
            z = assignments[i]
            counts[z] -= 1
            total = 0.0
            for kk in range(num_topics):
                w = phi[kk, t] * (counts[kk] + alpha)
                weights[kk] = w
                total += w
            draw = rng.random() * total
            acc = 0.0
            z = num_topics - 1
            for kk in range(num_topics):
                acc += weights[kk]
                if draw < acc:
                    z = kk
                    break
            assignments[i] = z
            counts[z] += 1

    denom = len(token_ids) + num_topics * alpha
    return np.array([(counts[z] + alpha) / denom for z in range(num_topics)])


def resource_vector(model: TopicModel, train: Folksonomy, resource: str) -> np.ndarray:
    """Topic vector for a resource: trained theta, else fold-in of its training tags."""
    theta = model.theta_for(resource)
    if theta is not None:
        return theta
    tag_counts = train.resource_tags(resource)
    if tag_counts:
        multiset = [t for t, c in sorted(tag_counts.items()) for _ in range(c)]
        return infer_topics(model, multiset)
    return model.uniform()


def corpus_log_likelihood(model: TopicModel, train: Folksonomy) -> float:
    """Token log-likelihood of a corpus under the trained mixtures."""
    resources, documents = _build_documents(train)
    ll = 0.0
    for resource, doc in zip(resources, documents):
        theta = resource_vector(model, train, resource)
        for tag in doc:
            t = model.tag_ids.get(tag)
            if t is None:
                continue
            ll += math.log(float(theta @ model.phi[:, t]))
    return ll
