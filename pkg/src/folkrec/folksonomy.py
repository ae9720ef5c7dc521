"""Folksonomy data model: ingestion, normalization, splitting and filtering.

The wire format is the four-column TAS row: ``user TAB resource TAB tag TAB
timestamp`` (UTF-8, integer seconds). Rows sharing (user, resource) form one
post whose timestamp is the minimum row timestamp of the group.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from .errors import ConfigError, DataError

SECONDS_PER_DAY = 86400

# Auto-generated tags stripped during normalization; override via `blacklist`.
DEFAULT_BLACKLIST = frozenset(
    {
        "no-tag",
        "bibtex-import",
        "imported",
        "public",
        "system:imported",
        "system:unfiled",
    }
)


def normalize_tag(raw: str, blacklist: frozenset[str] = DEFAULT_BLACKLIST) -> str | None:
    """Lowercase and strip a raw tag; None if the result is empty or blacklisted."""
    tag = raw.strip().lower()
    if not tag or tag in blacklist:
        return None
    return tag


@dataclass(frozen=True)
class Post:
    """One bookmark: a user assigning a set of tags to a resource at a point in time."""

    user: str
    resource: str
    tags: tuple[str, ...]
    timestamp: int

    def __post_init__(self) -> None:
        if not self.tags:
            raise DataError(f"post ({self.user}, {self.resource}) has no tags")
        if len(set(self.tags)) != len(self.tags):
            raise DataError(f"post ({self.user}, {self.resource}) has duplicate tags")
        if self.timestamp < 0:
            raise DataError(f"post ({self.user}, {self.resource}) has negative timestamp")


class Folksonomy:
    """Immutable indexed collection of posts.

    Vocabularies map user/resource/tag strings to dense integer ids assigned
    in canonical order (posts sorted by (user, timestamp, resource), tags
    sorted within a post), so the same set of posts always yields the same
    ids regardless of input ordering.
    """

    def __init__(self, posts: list[Post]):
        posts = _collapse_duplicates(posts)
        posts.sort(key=lambda p: (p.user, p.timestamp, p.resource))
        self.posts: list[Post] = posts

        self.user_vocab: dict[str, int] = {}
        self.resource_vocab: dict[str, int] = {}
        self.tag_vocab: dict[str, int] = {}
        self.user_index: dict[str, list[Post]] = {}
        self.resource_index: dict[str, list[Post]] = {}
        self.post_by_key: dict[tuple[str, str], Post] = {}
        self.tag_freq: dict[str, int] = {}
        self.resource_tag_freq: dict[str, dict[str, int]] = {}
        self.user_tag_freq: dict[str, dict[str, int]] = {}

        for post in posts:
            self.user_vocab.setdefault(post.user, len(self.user_vocab))
            self.resource_vocab.setdefault(post.resource, len(self.resource_vocab))
            self.user_index.setdefault(post.user, []).append(post)
            self.resource_index.setdefault(post.resource, []).append(post)
            self.post_by_key[(post.user, post.resource)] = post
            r_freq = self.resource_tag_freq.setdefault(post.resource, {})
            u_freq = self.user_tag_freq.setdefault(post.user, {})
            for tag in post.tags:
                self.tag_vocab.setdefault(tag, len(self.tag_vocab))
                self.tag_freq[tag] = self.tag_freq.get(tag, 0) + 1
                r_freq[tag] = r_freq.get(tag, 0) + 1
                u_freq[tag] = u_freq.get(tag, 0) + 1

    # Table-1 style dataset statistics.
    @property
    def n_posts(self) -> int:
        return len(self.posts)

    @property
    def n_users(self) -> int:
        return len(self.user_vocab)

    @property
    def n_resources(self) -> int:
        return len(self.resource_vocab)

    @property
    def n_tags(self) -> int:
        return len(self.tag_vocab)

    @property
    def n_assignments(self) -> int:
        return sum(len(p.tags) for p in self.posts)

    def resource_tags(self, resource: str) -> dict[str, int]:
        return self.resource_tag_freq.get(resource, {})

    def user_tags(self, user: str) -> dict[str, int]:
        return self.user_tag_freq.get(user, {})

    def to_tsv(self) -> str:
        """Canonical snapshot: one TAS row per (post, tag), deterministic order."""
        lines = []
        for post in self.posts:
            for tag in sorted(post.tags):
                lines.append(f"{post.user}\t{post.resource}\t{tag}\t{post.timestamp}")
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_tsv())

    def fingerprint(self) -> str:
        """Stable hex digest of the canonical snapshot."""
        return hashlib.sha256(self.to_tsv().encode("utf-8")).hexdigest()[:16]


def _collapse_duplicates(posts: list[Post]) -> list[Post]:
    # One bookmark per (user, resource): re-tagging keeps the latest post.
    latest: dict[tuple[str, str], Post] = {}
    for post in posts:
        key = (post.user, post.resource)
        prev = latest.get(key)
        if prev is None or (post.timestamp, post.tags) > (prev.timestamp, prev.tags):
            latest[key] = post
    return list(latest.values())


def ingest(
    path: str,
    blacklist: frozenset[str] = DEFAULT_BLACKLIST,
    format: str = "tas_rows",
) -> Folksonomy:
    """Parse a TAS-row file into a Folksonomy.

    Tags are normalized (and possibly dropped) row by row; rows are grouped by
    (user, resource) into posts with the group's minimum timestamp. Blank and
    ``#``-prefixed lines are ignored.
    """
    if format != "tas_rows":
        raise ConfigError(f"unsupported input format {format!r}; only 'tas_rows' exists")
    groups: dict[tuple[str, str], tuple[set[str], int]] = {}
    n_rows = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            user, resource, raw_tag, raw_ts = parts
            if not user or not resource:
                raise DataError(f"{path}:{lineno}: empty user or resource id")
            try:
                timestamp = int(raw_ts)
            except ValueError:
                raise DataError(f"{path}:{lineno}: timestamp {raw_ts!r} is not an integer") from None
            if timestamp < 0:
                raise DataError(f"{path}:{lineno}: negative timestamp {timestamp}")
            n_rows += 1
            tag = normalize_tag(raw_tag, blacklist)
            if tag is None:
                continue
            key = (user, resource)
            if key in groups:
                tags, ts = groups[key]
                tags.add(tag)
                groups[key] = (tags, min(ts, timestamp))
            else:
                groups[key] = ({tag}, timestamp)
    if n_rows == 0:
        raise DataError(f"{path}: empty dataset")
    posts = [
        Post(user=user, resource=resource, tags=tuple(sorted(tags)), timestamp=ts)
        for (user, resource), (tags, ts) in groups.items()
    ]
    if not posts:
        raise DataError(f"{path}: no posts left after tag normalization")
    return Folksonomy(posts)


def sample_users(f: Folksonomy, fraction: float, seed: int) -> Folksonomy:
    """Keep a seeded random fraction of user profiles (whole profiles)."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"sample fraction must be in (0, 1], got {fraction}")
    users = sorted(f.user_vocab)
    keep_n = max(1, round(fraction * len(users)))
    rng = random.Random(seed)
    kept = set(rng.sample(users, keep_n))
    return Folksonomy([p for p in f.posts if p.user in kept])


@dataclass
class DatasetSplit:
    """Leave-one-out split: per user the most recent post is held out."""

    train: Folksonomy
    test: list[Post] = field(default_factory=list)


def leave_one_out_split(f: Folksonomy) -> DatasetSplit:
    """Hold out each user's most recent post (ties broken by larger resource id)."""
    if not f.posts:
        raise DataError("cannot split an empty folksonomy")
    train_posts: list[Post] = []
    test_posts: list[Post] = []
    for user in sorted(f.user_vocab):
        posts = f.user_index[user]
        held_out = max(posts, key=lambda p: (p.timestamp, f.resource_vocab[p.resource]))
        test_posts.append(held_out)
        train_posts.extend(p for p in posts if p is not held_out)
    test_posts.sort(key=lambda p: (p.user, p.timestamp, p.resource))
    return DatasetSplit(train=Folksonomy(train_posts), test=test_posts)


def filter_test_users(split: DatasetSplit, b_min: int) -> list[Post]:
    """Keep test posts of users with at least `b_min` posts overall (train + test).

    Training data is untouched: recommendations still see the full graph.
    """
    if b_min < 1:
        raise ConfigError(f"b_min must be >= 1, got {b_min}")
    test_count: dict[str, int] = {}
    for post in split.test:
        test_count[post.user] = test_count.get(post.user, 0) + 1
    kept = []
    for post in split.test:
        total = len(split.train.user_index.get(post.user, ())) + test_count[post.user]
        if total >= b_min:
            kept.append(post)
    return kept
