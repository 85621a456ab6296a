"""Turn a message into the feature values used for training and scoring."""

from __future__ import annotations

from .errors import UnparseableUrl
from .langid import LanguageIdentifier, default_identifier
from .model import (
    NULL_VALUE,
    FeatureKind,
    FeatureValue,
    Message,
    canonical_url_domain,
    message_hour,
)

LOCAL = "local"
NONLOCAL = "nonlocal"


def proximity(m: Message) -> str:
    # no recipient network means a post on the sender's own wall
    if m.recipient_network is None or m.recipient_network == m.network:
        return LOCAL
    return NONLOCAL


def link_domains(m: Message) -> list[str]:
    domains: list[str] = []
    for url in m.effective_urls():
        try:
            domain = canonical_url_domain(url)
        except UnparseableUrl:
            continue
        if domain not in domains:
            domains.append(domain)
    return domains


def _distinct(values) -> list[str]:
    out: list[str] = []
    for v in values:
        if v and v != NULL_VALUE and v not in out:
            out.append(v)
    return out


def extract_features(
    m: Message,
    tz_offset: int = 0,
    identifier: LanguageIdentifier | None = None,
) -> list[FeatureValue]:
    """Feature values of ``m``: one per mandatory kind, zero or more per optional kind.

    Optional values are de-duplicated within the message.  URLs that do not
    parse are skipped.
    """
    identifier = identifier or default_identifier()
    values = [
        FeatureValue(FeatureKind.TIME_OF_DAY, f"{message_hour(m, tz_offset):02d}"),
        FeatureValue(FeatureKind.SOURCE, m.source_app),
        FeatureValue(FeatureKind.LANGUAGE, identifier.detect(m.text, m.language_hint)),
        FeatureValue(FeatureKind.PROXIMITY, proximity(m)),
    ]
    values += [FeatureValue(FeatureKind.LINK, d) for d in _distinct(link_domains(m))]
    values += [
        FeatureValue(FeatureKind.DIRECT_INTERACTION, a)
        for a in _distinct(m.effective_mentions())
    ]
    values += [
        FeatureValue(FeatureKind.TOPIC, t) for t in _distinct(m.effective_hashtags())
    ]
    return values


def group_by_kind(values: list[FeatureValue]) -> dict[FeatureKind, list[str]]:
    grouped: dict[FeatureKind, list[str]] = {kind: [] for kind in FeatureKind}
    for fv in values:
        grouped[fv.kind].append(fv.value)
    return grouped
