"""Batch driver: read JSONL streams, train, score and detect campaigns."""

from __future__ import annotations

import bisect
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence, TextIO

from .campaigns import ApplicationRegistry, GroupVerdict, judge_group, predominant_app
from .clustering import ObservationWindow, cluster_window
from .config import Config
from .errors import CorruptProfile, StreamTooShort
from .langid import LanguageIdentifier, default_identifier
from .model import BehavioralProfile, Message, format_timestamp
from .profiles import ProfileStore, build_profile
from .scoring import MessageScore, score_message

log = logging.getLogger(__name__)

REGISTRY_FILE = "applications.json"


@dataclass
class ReadStats:
    lines: int = 0
    malformed: int = 0
    duplicates: int = 0
    errors: list[str] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return self.lines - self.malformed - self.duplicates


def parse_messages(lines: Iterable[str], stats: ReadStats | None = None) -> list[Message]:
    """Decode JSONL lines into messages; bad lines are counted, not raised."""
    stats = stats if stats is not None else ReadStats()
    seen: set[str] = set()
    out: list[Message] = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        stats.lines += 1
        try:
            data = json.loads(line)
            if not isinstance(data, dict):
                raise ValueError("line is not a JSON object")
            m = Message.from_dict(data)
        except (ValueError, TypeError) as exc:
            stats.malformed += 1
            if len(stats.errors) < 20:
                stats.errors.append(f"line {lineno}: {exc}")
            continue
        if m.message_id in seen:
            stats.duplicates += 1
            if len(stats.errors) < 20:
                stats.errors.append(f"line {lineno}: duplicate message_id {m.message_id!r}")
            continue
        seen.add(m.message_id)
        out.append(m)
    return out


def read_messages(path: str | Path) -> tuple[list[Message], ReadStats]:
    stats = ReadStats()
    with open(path, encoding="utf-8") as fh:
        messages = parse_messages(fh, stats)
    return messages, stats


def write_messages(messages: Iterable[Message], fh: TextIO) -> None:
    for m in messages:
        fh.write(json.dumps(m.to_dict(), ensure_ascii=False) + "\n")


def chronological(messages: Iterable[Message]) -> list[Message]:
    return sorted(messages, key=lambda m: (m.timestamp, m.message_id))


def horizon(stream: Sequence[Message], before: datetime, days: float, count: int) -> Sequence[Message]:
    """Most recent ``days`` before ``before`` or most recent ``count`` messages,
    whichever holds more.  ``stream`` must be chronological."""
    end = bisect.bisect_left([m.timestamp for m in stream], before)
    recent = stream[:end]
    cutoff = before - timedelta(days=days)
    by_time = end - bisect.bisect_left([m.timestamp for m in recent], cutoff)
    keep = max(by_time, min(count, end))
    return recent[end - keep :]


class HistoryIndex:
    """Per-account chronological message history."""

    def __init__(self, messages: Iterable[Message] = ()):
        self._by_account: dict[str, list[Message]] = defaultdict(list)
        self._times: dict[str, list[datetime]] = defaultdict(list)
        self.extend(messages)

    def extend(self, messages: Iterable[Message]) -> None:
        touched = set()
        for m in messages:
            self._by_account[m.account_id].append(m)
            touched.add(m.account_id)
        for acct in touched:
            self._by_account[acct].sort(key=lambda m: (m.timestamp, m.message_id))
            self._times[acct] = [m.timestamp for m in self._by_account[acct]]

    def accounts(self) -> list[str]:
        return sorted(self._by_account)

    def __contains__(self, account_id: str) -> bool:
        return account_id in self._by_account

    def stream(self, account_id: str) -> list[Message]:
        return self._by_account.get(account_id, [])

    def slice_before(self, account_id: str, before: datetime, days: float, count: int) -> tuple[int, int]:
        """Index range of the training horizon ending strictly before ``before``."""
        times = self._times.get(account_id)
        if not times:
            return (0, 0)
        end = bisect.bisect_left(times, before)
        by_time = end - bisect.bisect_left(times, before - timedelta(days=days), 0, end)
        keep = max(by_time, min(count, end))
        return (end - keep, end)

    def latest(self) -> datetime | None:
        stamps = [t[-1] for t in self._times.values() if t]
        return max(stamps) if stamps else None


class ProfileProvider:
    """Builds or loads profiles on demand.

    History (a history file plus earlier windows of the stream) wins when it
    holds at least ``min_messages`` messages inside the training horizon;
    otherwise the stored profile is used, if any.
    """

    def __init__(
        self,
        config: Config,
        store: ProfileStore | None = None,
        history: HistoryIndex | None = None,
        identifier: LanguageIdentifier | None = None,
    ):
        self.config = config
        self.store = store
        self.history = history or HistoryIndex()
        self.identifier = identifier or default_identifier()
        self._built: dict[tuple[str, int, int], BehavioralProfile | None] = {}
        self._stored: dict[str, BehavioralProfile | None] = {}
        self.builds = 0
        self.corrupt = 0

    def get(self, account_id: str, before: datetime | None = None) -> BehavioralProfile | None:
        pc = self.config.profiles
        if account_id in self.history:
            if before is None:
                latest = self.history.stream(account_id)[-1].timestamp
                before = latest + timedelta(seconds=1)
            lo, hi = self.history.slice_before(
                account_id, before, pc.history_days, pc.history_messages
            )
            if hi - lo >= pc.min_messages:
                key = (account_id, lo, hi)
                if key not in self._built:
                    self._built[key] = self._build(account_id, self.history.stream(account_id)[lo:hi])
                if self._built[key] is not None:
                    return self._built[key]
        return self._from_store(account_id)

    def _build(self, account_id: str, stream: Sequence[Message]) -> BehavioralProfile | None:
        pc = self.config.profiles
        self.builds += 1
        try:
            return build_profile(
                account_id,
                stream,
                pc.min_messages,
                pc.tz_offset(account_id),
                self.identifier,
            )
        except StreamTooShort:
            return None

    def _from_store(self, account_id: str) -> BehavioralProfile | None:
        if self.store is None:
            return None
        if account_id not in self._stored:
            try:
                self._stored[account_id] = self.store.get(account_id)
            except CorruptProfile as exc:
                log.warning("%s", exc)
                self.corrupt += 1
                self._stored[account_id] = None
        return self._stored[account_id]


def window_start(ts: datetime, seconds: int) -> datetime:
    epoch = int(ts.timestamp())
    return datetime.fromtimestamp(epoch - epoch % seconds, tz=timezone.utc)


def tumbling_windows(messages: Iterable[Message], seconds: int) -> list[ObservationWindow]:
    """Non-overlapping windows aligned to the epoch, in time order."""
    buckets: dict[datetime, list[Message]] = defaultdict(list)
    for m in messages:
        buckets[window_start(m.timestamp, seconds)].append(m)
    return [
        ObservationWindow(start, seconds, tuple(chronological(buckets[start])))
        for start in sorted(buckets)
    ]


def train_profiles(
    messages: Sequence[Message], config: Config, identifier: LanguageIdentifier | None = None
) -> tuple[dict[str, BehavioralProfile], dict[str, int]]:
    """Profiles for every account with enough history; returns (profiles, skipped)."""
    index = HistoryIndex(messages)
    latest = index.latest()
    profiles: dict[str, BehavioralProfile] = {}
    skipped: dict[str, int] = {}
    if latest is None:
        return profiles, skipped
    before = latest + timedelta(seconds=1)
    pc = config.profiles
    identifier = identifier or default_identifier()
    for acct in index.accounts():
        lo, hi = index.slice_before(acct, before, pc.history_days, pc.history_messages)
        try:
            profiles[acct] = build_profile(
                acct, index.stream(acct)[lo:hi], pc.min_messages, pc.tz_offset(acct), identifier
            )
        except StreamTooShort as exc:
            skipped[acct] = exc.length
    return profiles, skipped


@dataclass
class ScoreOutcome:
    message: Message
    score: MessageScore | None

    def to_dict(self) -> dict[str, Any]:
        if self.score is None:
            return {
                "message_id": self.message.message_id,
                "account_id": self.message.account_id,
                "status": "unevaluable",
                "reason": "profile_missing",
            }
        return self.score.to_dict()


def score_messages(
    messages: Sequence[Message], provider: ProfileProvider, config: Config
) -> Iterator[ScoreOutcome]:
    weights = config.scoring.feature_weights()
    for m in messages:
        profile = provider.get(m.account_id)
        if profile is None:
            yield ScoreOutcome(m, None)
            continue
        yield ScoreOutcome(
            m,
            score_message(
                profile,
                m,
                weights,
                config.profiles.tz_offset(m.account_id),
                provider.identifier,
            ),
        )


@dataclass
class DetectionSummary:
    windows: int = 0
    messages: int = 0
    groups: int = 0
    groups_judged: int = 0
    groups_compromised: int = 0
    groups_allow_listed: int = 0
    groups_over_budget: int = 0
    groups_without_evaluated_members: int = 0
    messages_scored: int = 0
    messages_unevaluable: int = 0
    violations: int = 0
    accounts_flagged: set[str] = field(default_factory=set)

    def to_dict(self) -> dict[str, Any]:
        return {
            "record": "summary",
            "windows": self.windows,
            "messages": self.messages,
            "groups_total": self.groups,
            "groups_judged": self.groups_judged,
            "groups_compromised": self.groups_compromised,
            "groups_allow_listed": self.groups_allow_listed,
            "groups_over_budget": self.groups_over_budget,
            "groups_without_evaluated_members": self.groups_without_evaluated_members,
            "messages_scored": self.messages_scored,
            "messages_unevaluable": self.messages_unevaluable,
            "violations": self.violations,
            "accounts_flagged": len(self.accounts_flagged),
            "flagged_accounts": sorted(self.accounts_flagged),
        }


class Detector:
    """Runs windows through clustering, scoring and group judgement.

    The application registry and the history index persist across windows;
    after a window is judged its messages join the history used for later
    windows, never for their own.
    """

    def __init__(
        self,
        config: Config,
        provider: ProfileProvider,
        registry: ApplicationRegistry | None = None,
        learn_from_stream: bool = True,
    ):
        self.config = config
        self.provider = provider
        self.registry = registry or ApplicationRegistry(
            seed=config.seed, sample_size=config.campaign.sample_size
        )
        self.learn_from_stream = learn_from_stream
        self.weights = config.scoring.feature_weights()
        self.rules = config.campaign.rules()
        self.allowed = config.campaign.allowed_apps()
        self.summary = DetectionSummary()

    def run(self, messages: Iterable[Message]) -> Iterator[dict[str, Any]]:
        """Yield one verdict record per judged group, then the summary record."""
        for window in tumbling_windows(messages, self.config.clustering.window_seconds):
            yield from self.process_window(window)
        yield self.summary.to_dict()

    def process_window(self, window: ObservationWindow) -> Iterator[dict[str, Any]]:
        summary = self.summary
        summary.windows += 1
        summary.messages += len(window.messages)
        self.registry.observe_all(window.messages)
        groups = cluster_window(window, self.config.clustering.min_group_size)
        summary.groups += len(groups)

        budget = self.config.campaign.budget
        fetched: dict[str, BehavioralProfile | None] = {}
        judged = []
        scores: dict[str, MessageScore | None] = {}
        for group in groups:
            if self.allowed and predominant_app(group.messages) in self.allowed:
                summary.groups_allow_listed += 1
                continue
            if budget is not None and len(fetched) >= budget:
                summary.groups_over_budget += 1
                continue
            for m in group.messages:
                if m.account_id not in fetched:
                    if budget is not None and len(fetched) >= budget:
                        scores[m.message_id] = None
                        continue
                    fetched[m.account_id] = self.provider.get(m.account_id, window.start)
                profile = fetched[m.account_id]
                scores[m.message_id] = (
                    None
                    if profile is None
                    else score_message(
                        profile,
                        m,
                        self.weights,
                        self.config.profiles.tz_offset(m.account_id),
                        self.provider.identifier,
                    )
                )
            judged.append(group)

        first_violation: dict[str, datetime] = {}
        for group in judged:
            for m in group.messages:
                s = scores.get(m.message_id)
                if s is None:
                    summary.messages_unevaluable += 1
                    continue
                summary.messages_scored += 1
                if s.violates_profile:
                    summary.violations += 1
                    prev = first_violation.get(m.source_app)
                    if prev is None or m.timestamp < prev:
                        first_violation[m.source_app] = m.timestamp
        for app in sorted(first_violation):
            self.registry.record_violation(app, first_violation[app])

        for group in judged:
            verdict = judge_group(group, scores, self.registry, self.rules)
            summary.groups_judged += 1
            if verdict.no_evaluated_members:
                summary.groups_without_evaluated_members += 1
            if verdict.compromised:
                summary.groups_compromised += 1
                summary.accounts_flagged.update(verdict.compromised_accounts)
            yield self._record(window, verdict)

        if self.learn_from_stream:
            self.provider.history.extend(window.messages)

    def _record(self, window: ObservationWindow, verdict: GroupVerdict) -> dict[str, Any]:
        record = {"record": "group", "window_start": format_timestamp(window.start)}
        record.update(verdict.to_dict())
        return record
