"""Slow, obviously-correct reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import random
import re
from datetime import timedelta
from urllib.parse import urlparse

from profilewatch.model import Message

from conftest import BASE


def shingles(text):
    words = re.sub(r"https?://\S+", " ", text.lower(), flags=re.I).split()
    return {tuple(words[i : i + 4]) for i in range(len(words) - 3)}


def norm_url(url):
    try:
        p = urlparse(url)
        host = (p.hostname or "").rstrip(".")
        port = p.port
    except ValueError:
        return None
    if not p.scheme or not host:
        return None
    if any(host == s or host.endswith("." + s) for s in ("youtube.com", "facebook.com")):
        return None
    return (p.scheme.lower(), host, port, p.path or "/")


def urls_of(m):
    found = m.urls if m.urls is not None else re.findall(r"https?://\S+", m.text, flags=re.I)
    return {u for u in map(norm_url, found) if u is not None}


def brute_force_partition(messages, min_size=2):
    """Connected components of the pairwise similarity graph, checked pair by pair."""
    n = len(messages)
    sh = [shingles(m.text) for m in messages]
    us = [urls_of(m) for m in messages]
    adj = {i: set() for i in range(n)}
    for i, j in itertools.combinations(range(n), 2):
        if sh[i] & sh[j] or us[i] & us[j]:
            adj[i].add(j)
            adj[j].add(i)
    seen, parts = set(), set()
    for i in range(n):
        if i in seen:
            continue
        stack, comp = [i], set()
        while stack:
            k = stack.pop()
            if k in comp:
                continue
            comp.add(k)
            stack.extend(adj[k] - comp)
        seen |= comp
        if len(comp) >= min_size:
            parts.add(frozenset(messages[k].message_id for k in comp))
    return parts


VOCAB = "free gift click here now win iphone today cheap pills deal best".split()
URL_POOL = [
    "http://spam.biz/go?id={}",
    "https://a.com/p?u={}",
    "https://a.com/q",
    "http://b.org/",
    "https://www.youtube.com/watch?v={}",
    "https://m.facebook.com/story?id={}",
]


def random_window(rng: random.Random, size: int, start=BASE, duration=3600):
    out = []
    for i in range(size):
        words = [rng.choice(VOCAB) for _ in range(rng.randint(2, 9))]
        if rng.random() < 0.4:
            words.append(rng.choice(URL_POOL).format(rng.randint(1, 3)))
        out.append(
            Message(
                message_id=f"r{i}",
                account_id=f"u{rng.randrange(50)}",
                timestamp=start + timedelta(seconds=rng.randrange(duration)),
                text=" ".join(words),
                source_app=rng.choice(["web", "bot"]),
            )
        )
    return out


def levenshtein_dp(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def ratio_dp(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    return 1.0 if longest == 0 else 1 - levenshtein_dp(a, b) / longest
