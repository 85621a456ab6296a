"""Decide which message groups are campaigns run over compromised accounts.

A group is suspicious when the fraction of its evaluated members that violate
their own profile exceeds a size-dependent threshold.  Suspicious groups from
client applications are flagged outright; groups whose predominant
application posts from templates (a bulk application) are flagged only when
that application is not popular.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import os
import random
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .clustering import MessageGroup
from .model import Message, format_timestamp, parse_timestamp
from .scoring import MessageScore

THRESHOLD_SLOPE = -0.005
THRESHOLD_INTERCEPT = 0.82
THRESHOLD_FLOOR = 0.1
BULK_RATIO_CUTOFF = 0.35
POPULARITY_CUTOFF = 1_000_000
SAMPLE_SIZE = 10
REGISTRY_FORMAT_VERSION = 1


class AppClass(str, enum.Enum):
    CLIENT = "client"
    BULK = "bulk"


def group_threshold(
    n: int,
    slope: float = THRESHOLD_SLOPE,
    intercept: float = THRESHOLD_INTERCEPT,
    floor: float = THRESHOLD_FLOOR,
) -> float:
    """Violation fraction a group of ``n`` messages must exceed."""
    if n < 1:
        raise ValueError("group size must be at least 1")
    return max(floor, slope * n + intercept)


def levenshtein(a: str, b: str) -> int:
    """Edit distance via the bit-parallel algorithm of Myers/Hyyrö.

    The shorter string is encoded as bit vectors, so each character of the
    longer one costs a constant number of big-integer operations.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    peq: dict[str, int] = {}
    for i, ch in enumerate(b):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    mask = (1 << m) - 1
    high = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for ch in a:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | (~(xh | pv) & mask)
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = ((ph << 1) | 1) & mask
        mh = (mh << 1) & mask
        pv = mh | (~(xv | ph) & mask)
        mv = ph & xv
    return score


def levenshtein_ratio(a: str, b: str) -> float:
    """1 - distance / length of the longer string; 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def mean_pairwise_ratio(texts: Sequence[str]) -> float:
    pairs = list(itertools.combinations(texts, 2))
    if not pairs:
        return 0.0
    return math.fsum(levenshtein_ratio(a, b) for a, b in pairs) / len(pairs)


@dataclass
class ApplicationStats:
    """What the registry knows about one posting application.

    ``first_use`` maps account to the first time it was seen using the app; it
    is only kept until the first violation, at which point the number of
    earlier accounts is frozen into ``distinct_accounts_before_first_violation``.
    """

    app: str
    first_seen: datetime
    first_violation: datetime | None = None
    distinct_accounts_before_first_violation: int = 0
    sampled_messages: list[str] = field(default_factory=list)
    seen_messages: int = 0
    first_use: dict[str, datetime] = field(default_factory=dict)

    def accounts_before(self, instant: datetime) -> int:
        return sum(1 for ts in self.first_use.values() if ts < instant)

    def to_dict(self) -> dict[str, Any]:
        return {
            "app": self.app,
            "first_seen": format_timestamp(self.first_seen),
            "first_violation": (
                None if self.first_violation is None else format_timestamp(self.first_violation)
            ),
            "distinct_accounts_before_first_violation": self.distinct_accounts_before_first_violation,
            "sampled_messages": list(self.sampled_messages),
            "seen_messages": self.seen_messages,
            "first_use": {
                acct: format_timestamp(ts) for acct, ts in sorted(self.first_use.items())
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ApplicationStats":
        fv = data.get("first_violation")
        return cls(
            app=data["app"],
            first_seen=parse_timestamp(data["first_seen"]),
            first_violation=None if fv is None else parse_timestamp(fv),
            distinct_accounts_before_first_violation=int(
                data.get("distinct_accounts_before_first_violation", 0)
            ),
            sampled_messages=list(data.get("sampled_messages", [])),
            seen_messages=int(data.get("seen_messages", 0)),
            first_use={a: parse_timestamp(t) for a, t in data.get("first_use", {}).items()},
        )


def classify_application(
    stats: ApplicationStats, cutoff: float = BULK_RATIO_CUTOFF
) -> AppClass:
    """Bulk when sampled messages are alike on average (template output)."""
    if len(stats.sampled_messages) < 2:
        return AppClass.CLIENT
    if mean_pairwise_ratio(stats.sampled_messages) >= cutoff:
        return AppClass.BULK
    return AppClass.CLIENT


def popularity_score(stats: ApplicationStats) -> float | None:
    """Accounts before the first violation times the app's age at that moment.

    None when the application never produced a violation.
    """
    if stats.first_violation is None:
        return None
    age = int((stats.first_violation - stats.first_seen).total_seconds())
    return float(stats.distinct_accounts_before_first_violation * age)


def is_popular(stats: ApplicationStats, cutoff: float = POPULARITY_CUTOFF) -> bool:
    score = popularity_score(stats)
    return True if score is None else score > cutoff


class ApplicationRegistry:
    """Per-application history accumulated across windows of a run.

    Message samples are drawn by reservoir sampling from every message the
    application posted, with one RNG per application seeded from the run
    seed, so a run is reproducible.
    """

    def __init__(self, seed: int = 0, sample_size: int = SAMPLE_SIZE):
        self.seed = seed
        self.sample_size = sample_size
        self.apps: dict[str, ApplicationStats] = {}
        self._rngs: dict[str, random.Random] = {}
        self._class_cache: dict[tuple[str, int, float], AppClass] = {}

    def get(self, app: str) -> ApplicationStats | None:
        return self.apps.get(app)

    def _rng(self, app: str) -> random.Random:
        rng = self._rngs.get(app)
        if rng is None:
            stats = self.apps[app]
            rng = random.Random(f"{self.seed}:{app}:{stats.seen_messages}")
            self._rngs[app] = rng
        return rng

    def observe(self, m: Message) -> None:
        stats = self.apps.get(m.source_app)
        if stats is None:
            stats = self.apps[m.source_app] = ApplicationStats(m.source_app, m.timestamp)
        elif m.timestamp < stats.first_seen:
            stats.first_seen = m.timestamp
        if stats.first_violation is None:
            prev = stats.first_use.get(m.account_id)
            if prev is None or m.timestamp < prev:
                stats.first_use[m.account_id] = m.timestamp
        stats.seen_messages += 1
        if len(stats.sampled_messages) < self.sample_size:
            stats.sampled_messages.append(m.text)
        else:
            j = self._rng(m.source_app).randrange(stats.seen_messages)
            if j < self.sample_size:
                stats.sampled_messages[j] = m.text

    def observe_all(self, messages: Iterable[Message]) -> None:
        for m in messages:
            self.observe(m)

    def record_violation(self, app: str, instant: datetime) -> None:
        stats = self.apps.get(app)
        if stats is None:
            stats = self.apps[app] = ApplicationStats(app, instant)
        if stats.first_violation is not None and stats.first_violation <= instant:
            return
        if stats.first_violation is None:
            stats.first_violation = instant
            stats.distinct_accounts_before_first_violation = stats.accounts_before(instant)
            stats.first_use.clear()
        else:
            # an earlier violation than the recorded one; accounts cannot be recounted
            stats.first_violation = instant

    def classify(self, app: str, cutoff: float = BULK_RATIO_CUTOFF) -> AppClass:
        stats = self.apps.get(app)
        if stats is None:
            return AppClass.CLIENT
        key = (app, stats.seen_messages, cutoff)
        cached = self._class_cache.get(key)
        if cached is None:
            cached = self._class_cache[key] = classify_application(stats, cutoff)
        return cached

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": REGISTRY_FORMAT_VERSION,
            "seed": self.seed,
            "sample_size": self.sample_size,
            "apps": [self.apps[a].to_dict() for a in sorted(self.apps)],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ApplicationRegistry":
        reg = cls(seed=int(data.get("seed", 0)), sample_size=int(data.get("sample_size", SAMPLE_SIZE)))
        for item in data.get("apps", []):
            stats = ApplicationStats.from_dict(item)
            reg.apps[stats.app] = stats
        return reg

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.to_dict(), fh, ensure_ascii=False, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    @classmethod
    def load(cls, path: str | Path, seed: int = 0, sample_size: int = SAMPLE_SIZE) -> "ApplicationRegistry":
        path = Path(path)
        if not path.exists():
            return cls(seed=seed, sample_size=sample_size)
        reg = cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        reg.seed, reg.sample_size = seed, sample_size
        return reg


@dataclass(frozen=True)
class CampaignRules:
    slope: float = THRESHOLD_SLOPE
    intercept: float = THRESHOLD_INTERCEPT
    floor: float = THRESHOLD_FLOOR
    bulk_cutoff: float = BULK_RATIO_CUTOFF
    popularity_cutoff: float = POPULARITY_CUTOFF

    def threshold(self, n: int) -> float:
        return group_threshold(n, self.slope, self.intercept, self.floor)


@dataclass(frozen=True)
class GroupVerdict:
    group_id: str
    kind: str
    key: str
    n: int
    evaluated: int
    violations: int
    fraction: float
    threshold: float
    predominant_app: str
    app_class: AppClass
    app_popular: bool
    popularity_score: float | None
    compromised: bool
    no_evaluated_members: bool
    compromised_accounts: tuple[str, ...]
    members: tuple[dict[str, Any], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "group_id": self.group_id,
            "kind": self.kind,
            "key": self.key,
            "n": self.n,
            "evaluated": self.evaluated,
            "violations": self.violations,
            "fraction": self.fraction,
            "threshold": self.threshold,
            "predominant_app": self.predominant_app,
            "app_class": self.app_class.value,
            "app_popular": self.app_popular,
            "popularity_score": self.popularity_score,
            "compromised": self.compromised,
            "no_evaluated_members": self.no_evaluated_members,
            "compromised_accounts": list(self.compromised_accounts),
            "members": list(self.members),
        }


def predominant_app(messages: Iterable[Message]) -> str:
    counts = Counter(m.source_app for m in messages)
    return min(counts, key=lambda app: (-counts[app], app))


def judge_group(
    group: MessageGroup,
    scores: Mapping[str, MessageScore | None],
    registry: ApplicationRegistry,
    rules: CampaignRules = CampaignRules(),
) -> GroupVerdict:
    """Verdict for one group given member scores (None = unevaluable).

    Unevaluable members are left out of both sides of the violation fraction.
    """
    evaluated = [scores[m.message_id] for m in group.messages if scores.get(m.message_id) is not None]
    violating = [s for s in evaluated if s.violates_profile]
    fraction = len(violating) / len(evaluated) if evaluated else 0.0
    threshold = rules.threshold(group.n)
    app = predominant_app(group.messages)
    app_class = registry.classify(app, rules.bulk_cutoff)
    stats = registry.get(app)
    popularity = None if stats is None else popularity_score(stats)
    popular = True if popularity is None else popularity > rules.popularity_cutoff

    suspicious = bool(evaluated) and fraction > threshold
    compromised = suspicious and (app_class is AppClass.CLIENT or not popular)
    accounts = sorted({s.account_id for s in violating}) if compromised else []

    members = []
    for m in group.messages:
        s = scores.get(m.message_id)
        if s is None:
            members.append(
                {"message_id": m.message_id, "account_id": m.account_id, "status": "unevaluable"}
            )
        else:
            members.append(s.to_dict())
    return GroupVerdict(
        group_id=group.group_id,
        kind=group.kind.value,
        key=group.key,
        n=group.n,
        evaluated=len(evaluated),
        violations=len(violating),
        fraction=fraction,
        threshold=threshold,
        predominant_app=app,
        app_class=app_class,
        app_popular=popular,
        popularity_score=popularity,
        compromised=compromised,
        no_evaluated_members=not evaluated,
        compromised_accounts=tuple(accounts),
        members=tuple(members),
    )
