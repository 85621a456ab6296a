"""Group the messages of one observation window by text and URL similarity.

Two messages are similar when they share a word 4-gram or a normalised URL.
Groups are the connected components of that relation, found with a
union-find over an inverted index (shingle/URL -> first message seen), so a
window is clustered in time linear in its total number of shingles.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Any, Iterable, Sequence
from urllib.parse import urlsplit

from .model import URL_RE, Message, format_timestamp

SHINGLE_SIZE = 4
MIN_GROUP_SIZE = 2
TWITTER_WINDOW_SECONDS = 3600
FACEBOOK_WINDOW_SECONDS = 8 * 3600

# sites that address content through the query string
QUERY_ADDRESSED_SITES = ("youtube.com", "facebook.com")


class SimilarityKind(str, enum.Enum):
    TEXT = "text"
    URL = "url"


@dataclass(frozen=True)
class ObservationWindow:
    start: datetime
    duration: int
    messages: tuple[Message, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        end = self.end
        for m in self.messages:
            if not self.start <= m.timestamp < end:
                raise ValueError(
                    f"message {m.message_id} at {format_timestamp(m.timestamp)} "
                    f"outside window starting {format_timestamp(self.start)}"
                )

    @property
    def end(self) -> datetime:
        return self.start + timedelta(seconds=self.duration)


@dataclass(frozen=True)
class MessageGroup:
    group_id: str
    kind: SimilarityKind
    key: str
    messages: tuple[Message, ...]

    @property
    def n(self) -> int:
        return len(self.messages)

    def to_dict(self) -> dict[str, Any]:
        return {
            "group_id": self.group_id,
            "kind": self.kind.value,
            "key": self.key,
            "n": self.n,
            "message_ids": [m.message_id for m in self.messages],
        }


def text_shingles(text: str) -> set[str]:
    """Word 4-grams of the lowercased, URL-stripped text (whitespace tokens)."""
    tokens = URL_RE.sub(" ", text.lower()).split()
    return {
        " ".join(tokens[i : i + SHINGLE_SIZE])
        for i in range(len(tokens) - SHINGLE_SIZE + 1)
    }


def normalize_url_for_similarity(url: str) -> str | None:
    """``scheme://host/path`` with query and fragment dropped.

    Returns None (excluded) for unparseable URLs and for sites that use the
    query string to address content.
    """
    try:
        parts = urlsplit(url.strip())
        host = parts.hostname
        port = parts.port
    except (ValueError, AttributeError):
        return None
    if not parts.scheme or not host:
        return None
    host = host.rstrip(".")
    for site in QUERY_ADDRESSED_SITES:
        if host == site or host.endswith("." + site):
            return None
    netloc = host if port is None else f"{host}:{port}"
    return f"{parts.scheme.lower()}://{netloc}{parts.path or '/'}"


def message_urls(m: Message) -> set[str]:
    out = set()
    for url in m.effective_urls():
        norm = normalize_url_for_similarity(url)
        if norm is not None:
            out.add(norm)
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def _connected_pairs(members: list[int], postings: dict[str, list[int]], keys_of: dict[int, set[str]]) -> int:
    """Number of distinct member pairs sharing at least one key."""
    size = len(members)
    total = 0
    for i in members:
        lists = [postings[k] for k in keys_of[i] if k in postings]
        if not lists:
            continue
        longest = max(len(p) for p in lists)
        if longest == size:
            total += size - 1
            continue
        if len(lists) == 1:
            total += longest - 1
            continue
        neighbours: set[int] = set()
        for p in lists:
            neighbours.update(p)
        total += len(neighbours) - 1
    return total // 2


def _dominant_key(postings: dict[str, list[int]]) -> str:
    return min(postings, key=lambda k: (-len(postings[k]), k))


def cluster_messages(
    messages: Sequence[Message],
    min_group_size: int = MIN_GROUP_SIZE,
    group_prefix: str = "g",
) -> list[MessageGroup]:
    """Connected components of the similarity relation, largest first.

    A component linked by both measures is tagged with the measure that links
    more member pairs (text on ties); its key is that measure's most shared
    shingle or URL.
    """
    n = len(messages)
    uf = _UnionFind(n)
    first_text: dict[str, int] = {}
    first_url: dict[str, int] = {}
    for i, m in enumerate(messages):
        for s in text_shingles(m.text):
            j = first_text.setdefault(s, i)
            if j != i:
                uf.union(i, j)
        for u in message_urls(m):
            j = first_url.setdefault(u, i)
            if j != i:
                uf.union(i, j)
    del first_text, first_url

    components: dict[int, list[int]] = {}
    for i in range(n):
        if uf.size[uf.find(i)] >= min_group_size:
            components.setdefault(uf.find(i), []).append(i)

    built = []
    for members in components.values():
        text_keys = {i: text_shingles(messages[i].text) for i in members}
        url_keys = {i: message_urls(messages[i]) for i in members}
        text_post = _postings(text_keys)
        url_post = _postings(url_keys)
        text_pairs = _connected_pairs(members, text_post, text_keys) if text_post else 0
        url_pairs = _connected_pairs(members, url_post, url_keys) if url_post else 0
        if not text_post and not url_post:
            kind, key = SimilarityKind.TEXT, ""
        elif text_pairs >= url_pairs:
            kind, key = SimilarityKind.TEXT, _dominant_key(text_post)
        else:
            kind, key = SimilarityKind.URL, _dominant_key(url_post)
        group_msgs = tuple(
            sorted((messages[i] for i in members), key=lambda m: (m.timestamp, m.message_id))
        )
        built.append((kind, key, group_msgs))

    built.sort(key=lambda g: (-len(g[2]), g[0].value, g[1], g[2][0].message_id))
    return [
        MessageGroup(f"{group_prefix}{idx:04d}", kind, key, msgs)
        for idx, (kind, key, msgs) in enumerate(built)
    ]


def _postings(keys_of: dict[int, set[str]]) -> dict[str, list[int]]:
    postings: dict[str, list[int]] = {}
    for i, keys in keys_of.items():
        for k in keys:
            postings.setdefault(k, []).append(i)
    # keys held by a single member link nothing
    return {k: v for k, v in postings.items() if len(v) > 1}


def cluster_window(window: ObservationWindow, min_group_size: int = MIN_GROUP_SIZE) -> list[MessageGroup]:
    prefix = f"w{int(window.start.timestamp())}-g"
    return cluster_messages(window.messages, min_group_size, prefix)


def group_dump_lines(groups: Iterable[MessageGroup]) -> list[dict[str, Any]]:
    return [g.to_dict() for g in groups]
