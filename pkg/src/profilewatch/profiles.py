"""Profile training, time-of-day smoothing and the on-disk profile store."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import quote, unquote

from .errors import CorruptProfile, ProfileNotFound, StreamTooShort
from .features import extract_features, group_by_kind
from .langid import LanguageIdentifier
from .model import (
    NULL_VALUE,
    BehavioralProfile,
    FeatureKind,
    FeatureModel,
    Message,
)

MIN_STREAM_LENGTH = 10
STORE_FORMAT_VERSION = 1
HOURS = tuple(f"{h:02d}" for h in range(24))


def smooth_time_model(model: FeatureModel) -> dict[str, float]:
    """Average each hour with its two neighbours, wrapping around midnight.

    Returns counts for all 24 hours (absent hours count as zero).  Total mass
    is preserved because each raw count is spread in thirds over three hours.
    """
    if model.kind is not FeatureKind.TIME_OF_DAY:
        raise ValueError(f"cannot smooth a {model.kind.value} model")
    raw = [model.entries.get(h, 0) for h in HOURS]
    return {
        HOURS[i]: (raw[i - 1] + raw[i] + raw[(i + 1) % 24]) / 3 for i in range(24)
    }


def build_profile(
    account_id: str,
    stream: Sequence[Message],
    min_messages: int = MIN_STREAM_LENGTH,
    tz_offset: int = 0,
    identifier: LanguageIdentifier | None = None,
) -> BehavioralProfile:
    """Train all seven feature models from ``stream``.

    Raises StreamTooShort when the stream has fewer than ``min_messages``
    messages.  Counts are order-independent; ``trained_at`` is the newest
    message timestamp.
    """
    if len(stream) < min_messages:
        raise StreamTooShort(account_id, len(stream), min_messages)
    counters: dict[FeatureKind, Counter[str]] = {kind: Counter() for kind in FeatureKind}
    for m in stream:
        if m.account_id != account_id:
            raise ValueError(
                f"message {m.message_id} belongs to {m.account_id!r}, not {account_id!r}"
            )
        by_kind = group_by_kind(extract_features(m, tz_offset, identifier))
        for kind, values in by_kind.items():
            if kind.optional and not values:
                counters[kind][NULL_VALUE] += 1
            else:
                counters[kind].update(values)

    n = len(stream)
    models: dict[FeatureKind, FeatureModel] = {}
    for kind in FeatureKind:
        model = FeatureModel(kind, dict(counters[kind]), n)
        if kind is FeatureKind.TIME_OF_DAY:
            model = FeatureModel(kind, model.entries, n, smooth_time_model(model))
        models[kind] = model
    return BehavioralProfile(
        account_id=account_id,
        models=models,
        trained_on=n,
        trained_at=max(m.timestamp for m in stream),
    )


def _checksum(payload: Mapping) -> str:
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ProfileStore:
    """One JSON document per account under ``root/profiles``.

    Writes go through a temporary file and an atomic rename, so concurrent
    writers for one account resolve last-writer-wins and readers never see a
    partial document.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.profile_dir = self.root / "profiles"

    def path_for(self, account_id: str) -> Path:
        return self.profile_dir / f"{quote(account_id, safe='')}.json"

    def save(self, profile: BehavioralProfile) -> Path:
        self.profile_dir.mkdir(parents=True, exist_ok=True)
        payload = profile.to_dict()
        doc = {
            "format_version": STORE_FORMAT_VERSION,
            "checksum": _checksum(payload),
            "profile": payload,
        }
        target = self.path_for(profile.account_id)
        fd, tmp = tempfile.mkstemp(dir=self.profile_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, ensure_ascii=False, sort_keys=True)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return target

    def load(self, account_id: str) -> BehavioralProfile:
        path = self.path_for(account_id)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ProfileNotFound(account_id) from None
        try:
            doc = json.loads(raw)
            payload = doc["profile"]
            version = doc["format_version"]
            checksum = doc["checksum"]
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptProfile(f"{path}: unreadable profile document") from exc
        if version != STORE_FORMAT_VERSION:
            raise CorruptProfile(f"{path}: unsupported format version {version!r}")
        if _checksum(payload) != checksum:
            raise CorruptProfile(f"{path}: checksum mismatch")
        try:
            return BehavioralProfile.from_dict(payload)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptProfile(f"{path}: {exc}") from exc

    def get(self, account_id: str) -> BehavioralProfile | None:
        """Like ``load`` but returns None for unknown accounts."""
        try:
            return self.load(account_id)
        except ProfileNotFound:
            return None

    def __contains__(self, account_id: str) -> bool:
        return self.path_for(account_id).exists()

    def account_ids(self) -> Iterable[str]:
        if not self.profile_dir.is_dir():
            return []
        return sorted(unquote(p.stem) for p in self.profile_dir.glob("*.json"))
