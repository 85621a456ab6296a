"""Domain types: messages, feature vocabulary and profile containers.

Every type here is a frozen dataclass and is treated as immutable once built,
so instances can be shared freely between workers.  Each type round-trips
through ``to_dict``/``from_dict`` (the JSONL wire format) without loss.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Any, Iterable, Mapping
from urllib.parse import urlsplit

from .errors import UnparseableUrl

NULL_VALUE = "null"

URL_RE = re.compile(r"https?://\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"@([A-Za-z0-9_]+)")
HASHTAG_RE = re.compile(r"#([A-Za-z0-9_]+)")


class FeatureKind(str, enum.Enum):
    TIME_OF_DAY = "time_of_day"
    SOURCE = "source"
    LANGUAGE = "language"
    TOPIC = "topic"
    LINK = "link"
    DIRECT_INTERACTION = "direct_interaction"
    PROXIMITY = "proximity"

    @property
    def mandatory(self) -> bool:
        """Mandatory kinds carry exactly one value per message."""
        return self in MANDATORY_KINDS

    @property
    def optional(self) -> bool:
        return not self.mandatory


MANDATORY_KINDS = frozenset(
    {
        FeatureKind.TIME_OF_DAY,
        FeatureKind.SOURCE,
        FeatureKind.LANGUAGE,
        FeatureKind.PROXIMITY,
    }
)
OPTIONAL_KINDS = frozenset(FeatureKind) - MANDATORY_KINDS


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 instant, normalised to UTC with whole seconds."""
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {value!r} has no UTC offset")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def _str_tuple(values: Any, name: str) -> tuple[str, ...] | None:
    if values is None:
        return None
    if isinstance(values, str) or not isinstance(values, Iterable):
        raise ValueError(f"{name} must be a list of strings")
    out = tuple(values)
    if not all(isinstance(v, str) for v in out):
        raise ValueError(f"{name} must be a list of strings")
    return out


@dataclass(frozen=True)
class Message:
    """One social-network post.

    ``urls``, ``mentions`` and ``hashtags`` are ``None`` when the source data did
    not pre-extract them; feature extraction then falls back to scanning
    ``text``.  An empty tuple means "supplied, and there are none".
    """

    message_id: str
    account_id: str
    timestamp: datetime
    text: str
    source_app: str
    urls: tuple[str, ...] | None = None
    mentions: tuple[str, ...] | None = None
    hashtags: tuple[str, ...] | None = None
    network: str | None = None
    recipient_network: str | None = None
    language_hint: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.message_id, str) or not self.message_id:
            raise ValueError("message_id must be a non-empty string")
        if not isinstance(self.account_id, str):
            raise ValueError("account_id must be a string")
        if not isinstance(self.timestamp, datetime) or self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be a timezone-aware datetime")
        if not isinstance(self.text, str) or not isinstance(self.source_app, str):
            raise ValueError("text and source_app must be strings")
        for name in ("urls", "mentions", "hashtags"):
            object.__setattr__(self, name, _str_tuple(getattr(self, name), name))
        if self.hashtags is not None:
            for tag in self.hashtags:
                if tag.startswith("#") or tag != tag.lower():
                    raise ValueError(f"hashtag {tag!r} must be lowercase without '#'")

    @property
    def hour_utc(self) -> int:
        return self.timestamp.astimezone(timezone.utc).hour

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "message_id": self.message_id,
            "account_id": self.account_id,
            "timestamp": format_timestamp(self.timestamp),
            "text": self.text,
            "source_app": self.source_app,
        }
        for name in (
            "urls",
            "mentions",
            "hashtags",
            "network",
            "recipient_network",
            "language_hint",
        ):
            value = getattr(self, name)
            if value is not None:
                out[name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Message":
        """Build a message from a decoded JSON object; unknown keys are ignored."""
        try:
            hashtags = data.get("hashtags")
            if hashtags is not None and not isinstance(hashtags, str):
                hashtags = [str(h).lstrip("#").lower() for h in hashtags]
            return cls(
                message_id=data["message_id"],
                account_id=data["account_id"],
                timestamp=parse_timestamp(data["timestamp"]),
                text=data.get("text", ""),
                source_app=data.get("source_app", ""),
                urls=data.get("urls"),
                mentions=data.get("mentions"),
                hashtags=hashtags,
                network=data.get("network"),
                recipient_network=data.get("recipient_network"),
                language_hint=data.get("language_hint"),
            )
        except KeyError as exc:
            raise ValueError(f"missing required field {exc.args[0]!r}") from None

    def effective_urls(self) -> tuple[str, ...]:
        if self.urls is not None:
            return self.urls
        return tuple(URL_RE.findall(self.text))

    def effective_mentions(self) -> tuple[str, ...]:
        if self.mentions is not None:
            return self.mentions
        return tuple(MENTION_RE.findall(URL_RE.sub(" ", self.text)))

    def effective_hashtags(self) -> tuple[str, ...]:
        if self.hashtags is not None:
            return self.hashtags
        return tuple(h.lower() for h in HASHTAG_RE.findall(URL_RE.sub(" ", self.text)))


@dataclass(frozen=True)
class FeatureValue:
    kind: FeatureKind
    value: str

    def __post_init__(self) -> None:
        if self.kind is FeatureKind.TIME_OF_DAY:
            if len(self.value) != 2 or not self.value.isdigit() or int(self.value) > 23:
                raise ValueError(f"hour value must be '00'..'23', got {self.value!r}")
        if self.kind.optional and self.value == NULL_VALUE:
            raise ValueError("'null' is reserved for absence counting")


@dataclass(frozen=True)
class FeatureModel:
    """Histogram of one feature over an account's training stream.

    For the time-of-day model ``smoothed`` holds the adjacent-hour averaged
    counts for all 24 hours; scoring reads those instead of ``entries``.
    """

    kind: FeatureKind
    entries: Mapping[str, int]
    total: int
    smoothed: Mapping[str, float] | None = None

    def counts(self) -> Mapping[str, float]:
        """Counts used for scoring (smoothed where available)."""
        if self.smoothed is not None:
            return self.smoothed
        return self.entries

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind.value,
            "entries": dict(sorted(self.entries.items())),
            "total": self.total,
        }
        if self.smoothed is not None:
            out["smoothed"] = dict(sorted(self.smoothed.items()))
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeatureModel":
        smoothed = data.get("smoothed")
        return cls(
            kind=FeatureKind(data["kind"]),
            entries={str(k): int(v) for k, v in data["entries"].items()},
            total=int(data["total"]),
            smoothed=(
                None
                if smoothed is None
                else {str(k): float(v) for k, v in smoothed.items()}
            ),
        )


@dataclass(frozen=True)
class BehavioralProfile:
    account_id: str
    models: Mapping[FeatureKind, FeatureModel]
    trained_on: int
    trained_at: datetime

    def model(self, kind: FeatureKind) -> FeatureModel | None:
        return self.models.get(kind)

    def to_dict(self) -> dict[str, Any]:
        return {
            "account_id": self.account_id,
            "trained_on": self.trained_on,
            "trained_at": format_timestamp(self.trained_at),
            "models": {
                kind.value: self.models[kind].to_dict()
                for kind in FeatureKind
                if kind in self.models
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BehavioralProfile":
        models = {
            FeatureKind(k): FeatureModel.from_dict(v) for k, v in data["models"].items()
        }
        return cls(
            account_id=data["account_id"],
            models=models,
            trained_on=int(data["trained_on"]),
            trained_at=parse_timestamp(data["trained_at"]),
        )


def canonical_url_domain(url: str) -> str:
    """Lowercased host of an absolute URL; port, path, query and fragment dropped.

    >>> canonical_url_domain("http://Example.com/a/b?x=1")
    'example.com'
    """
    try:
        parts = urlsplit(url.strip())
        host = parts.hostname
        parts.port  # raises ValueError on a malformed port
    except (ValueError, AttributeError) as exc:
        raise UnparseableUrl(url) from exc
    if not parts.scheme or not host:
        raise UnparseableUrl(url)
    return host.rstrip(".")


def message_hour(m: Message, tz_offset: int = 0) -> int:
    """Hour of day (0..23) of ``m.timestamp`` shifted by ``tz_offset`` minutes."""
    return (m.timestamp.astimezone(timezone.utc) + timedelta(minutes=tz_offset)).hour
