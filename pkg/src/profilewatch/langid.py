"""Character n-gram language identification (rank-order profiles).

Each language is summarised by its 400 most frequent character n-grams
(n = 1..5, words padded with ``_``), ranked from 0.  A text is classified by
building the same kind of ranked profile for it and picking the language with
the smallest out-of-place distance: the sum over the text's n-grams of the
absolute rank difference, or ``MAX_NGRAMS`` for n-grams the language lacks.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .model import HASHTAG_RE, MENTION_RE, URL_RE

log = logging.getLogger(__name__)

MAX_NGRAMS = 400
MAX_N = 5
MIN_TEXT_LENGTH = 20
UNDETERMINED = "und"
CACHE_FORMAT_VERSION = 1

_WORD_RE = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)*")
_SPACE_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class LanguageProfile:
    """Ranked n-grams for one language; ``ranks`` maps n-gram to rank 0..399."""

    language: str
    ngrams: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.ngrams) > MAX_NGRAMS:
            raise ValueError(f"profile longer than {MAX_NGRAMS} n-grams")
        object.__setattr__(
            self, "_ranks", {g: rank for rank, g in enumerate(self.ngrams)}
        )

    @property
    def ranks(self) -> Mapping[str, int]:
        return self._ranks  # type: ignore[attr-defined]


def count_ngrams(text: str) -> Counter[str]:
    counts: Counter[str] = Counter()
    for word in _WORD_RE.findall(text.lower()):
        padded = f"_{word}_"
        size = len(padded)
        for i in range(size):
            for n in range(1, min(MAX_N, size - i) + 1):
                counts[padded[i : i + n]] += 1
    return counts


def ranked_ngrams(counts: Mapping[str, int], limit: int = MAX_NGRAMS) -> tuple[str, ...]:
    """Most frequent n-grams first; equal counts ordered lexicographically."""
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return tuple(g for g, _ in ordered[:limit])


def build_profile(language: str, text: str) -> LanguageProfile:
    return LanguageProfile(language, ranked_ngrams(count_ngrams(text)))


def out_of_place(doc: Iterable[str], profile: LanguageProfile) -> int:
    ranks = profile.ranks
    distance = 0
    for rank, gram in enumerate(doc):
        other = ranks.get(gram)
        distance += MAX_NGRAMS if other is None else abs(rank - other)
    return distance


def strip_markup(text: str) -> str:
    """Remove URLs, @mentions and #hashtags and collapse whitespace."""
    text = URL_RE.sub(" ", text)
    text = MENTION_RE.sub(" ", text)
    text = HASHTAG_RE.sub(" ", text)
    return _SPACE_RE.sub(" ", text).strip()


def train_language_profiles(corpus_dir: str | Path) -> dict[str, LanguageProfile]:
    """One profile per ``<code>.txt`` file in ``corpus_dir``; empty files are skipped."""
    profiles: dict[str, LanguageProfile] = {}
    for path in sorted(Path(corpus_dir).glob("*.txt")):
        text = path.read_text(encoding="utf-8")
        if not text.strip():
            log.warning("empty corpus file %s skipped", path)
            continue
        profiles[path.stem] = build_profile(path.stem, text)
    return profiles


def corpus_fingerprint(corpus_dir: str | Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(Path(corpus_dir).glob("*.txt")):
        digest.update(path.name.encode("utf-8") + b"\0")
        digest.update(path.read_bytes() + b"\0")
    return digest.hexdigest()


def load_or_train(corpus_dir: str | Path, cache_file: str | Path) -> dict[str, LanguageProfile]:
    """Train from ``corpus_dir`` unless ``cache_file`` matches the corpora already."""
    cache_file = Path(cache_file)
    fingerprint = corpus_fingerprint(corpus_dir)
    try:
        doc = json.loads(cache_file.read_text(encoding="utf-8"))
        if doc.get("version") == CACHE_FORMAT_VERSION and doc.get("fingerprint") == fingerprint:
            return {
                code: LanguageProfile(code, tuple(grams))
                for code, grams in doc["profiles"].items()
            }
    except (OSError, ValueError, KeyError, TypeError):
        pass
    profiles = train_language_profiles(corpus_dir)
    doc = {
        "version": CACHE_FORMAT_VERSION,
        "fingerprint": fingerprint,
        "profiles": {code: list(p.ngrams) for code, p in profiles.items()},
    }
    cache_file.parent.mkdir(parents=True, exist_ok=True)
    cache_file.write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")
    return profiles


class LanguageIdentifier:
    def __init__(self, profiles: Mapping[str, LanguageProfile]):
        if not profiles:
            raise ValueError("at least one language profile is required")
        self.profiles = dict(sorted(profiles.items()))
        self._detect = lru_cache(maxsize=65536)(self._detect_stripped)

    @classmethod
    def from_corpus_dir(
        cls, corpus_dir: str | Path, cache_file: str | Path | None = None
    ) -> "LanguageIdentifier":
        if cache_file is None:
            return cls(train_language_profiles(corpus_dir))
        return cls(load_or_train(corpus_dir, cache_file))

    def distances(self, text: str) -> dict[str, int]:
        doc = ranked_ngrams(count_ngrams(strip_markup(text)))
        return {code: out_of_place(doc, p) for code, p in self.profiles.items()}

    def detect(self, text: str, hint: str | None = None) -> str:
        if hint:
            return hint
        return self._detect(strip_markup(text))

    def _detect_stripped(self, stripped: str) -> str:
        if len(stripped) < MIN_TEXT_LENGTH:
            return UNDETERMINED
        doc = ranked_ngrams(count_ngrams(stripped))
        best_code, best = UNDETERMINED, None
        for code, profile in self.profiles.items():
            d = out_of_place(doc, profile)
            if best is None or d < best:
                best_code, best = code, d
        return best_code


def bundled_corpus_dir() -> Path:
    return Path(str(resources.files(__package__) / "corpora"))


@lru_cache(maxsize=1)
def default_identifier() -> LanguageIdentifier:
    return LanguageIdentifier.from_corpus_dir(bundled_corpus_dir())


def detect_language(text: str, hint: str | None = None) -> str:
    """Language code of ``text`` using the bundled corpora; ``hint`` wins when given."""
    return default_identifier().detect(text, hint)
