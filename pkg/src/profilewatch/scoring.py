"""Per-feature anomaly scores, weighted composition and the violation decision."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import ProfileMissing
from .features import extract_features, group_by_kind
from .langid import LanguageIdentifier
from .model import NULL_VALUE, BehavioralProfile, FeatureKind, FeatureModel, Message

DEFAULT_THRESHOLD = 0.5
COMPOSITE_DIGITS = 12

TWITTER_WEIGHTS = {
    FeatureKind.SOURCE: 3.3,
    FeatureKind.DIRECT_INTERACTION: 1.4,
    FeatureKind.LINK: 0.96,
    FeatureKind.TIME_OF_DAY: 0.88,
    FeatureKind.LANGUAGE: 0.58,
    FeatureKind.TOPIC: 0.39,
}
FACEBOOK_WEIGHTS = {
    FeatureKind.SOURCE: 2.2,
    FeatureKind.LINK: 1.1,
    FeatureKind.DIRECT_INTERACTION: 0.13,
    FeatureKind.PROXIMITY: 0.08,
    FeatureKind.TIME_OF_DAY: 0.06,
}
PRESETS = {"twitter": TWITTER_WEIGHTS, "facebook": FACEBOOK_WEIGHTS}


@dataclass(frozen=True)
class FeatureWeights:
    weights: Mapping[FeatureKind, float]
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        weights = {FeatureKind(k): float(v) for k, v in self.weights.items()}
        if any(w < 0 or math.isnan(w) for w in weights.values()):
            raise ValueError("feature weights must be non-negative")
        if not any(w > 0 for w in weights.values()):
            raise ValueError("at least one feature weight must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def preset(cls, name: str, threshold: float = DEFAULT_THRESHOLD) -> "FeatureWeights":
        try:
            return cls(PRESETS[name], threshold)
        except KeyError:
            raise ValueError(
                f"unknown weights preset {name!r} (choose from {sorted(PRESETS)})"
            ) from None

    def active(self) -> dict[FeatureKind, float]:
        """Kinds that take part in the composite (positive weight)."""
        return {k: w for k, w in self.weights.items() if w > 0}

    def scaled(self, factor: float) -> "FeatureWeights":
        return FeatureWeights({k: w * factor for k, w in self.weights.items()}, self.threshold)


@dataclass(frozen=True)
class MessageScore:
    message_id: str
    account_id: str
    per_feature: Mapping[FeatureKind, float]
    composite: float
    violates_profile: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "message_id": self.message_id,
            "account_id": self.account_id,
            "status": "scored",
            "per_feature": {
                k.value: self.per_feature[k] for k in FeatureKind if k in self.per_feature
            },
            "composite": self.composite,
            "violates_profile": self.violates_profile,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MessageScore":
        return cls(
            message_id=data["message_id"],
            account_id=data["account_id"],
            per_feature={FeatureKind(k): float(v) for k, v in data["per_feature"].items()},
            composite=float(data["composite"]),
            violates_profile=bool(data["violates_profile"]),
        )


def mean_count(model: FeatureModel) -> float:
    """Average count per observed value (the bar a value must reach to be normal)."""
    observed = [c for c in model.counts().values() if c > 0]
    if not observed:
        return 0.0
    return math.fsum(observed) / len(observed)


def score_mandatory(model: FeatureModel, value: str) -> float:
    """0 for a value seen at least as often as the average value, 1 for an
    unseen value, otherwise one minus its relative frequency."""
    if not model.kind.mandatory:
        raise ValueError(f"{model.kind.value} is not a mandatory model")
    if model.total <= 0:
        return 1.0
    c = model.counts().get(value, 0)
    if c <= 0:
        return 1.0
    mean = mean_count(model)
    if c >= mean or math.isclose(c, mean, rel_tol=1e-12):
        return 0.0
    return min(1.0, max(0.0, 1.0 - c / model.total))


def score_optional(model: FeatureModel, values: Iterable[str]) -> float:
    """Max over values of: 0 if seen before, else the account's null rate.

    A message without any value for the kind is never anomalous.
    """
    if not model.kind.optional:
        raise ValueError(f"{model.kind.value} is not an optional model")
    values = list(values)
    if not values or model.total <= 0:
        return 0.0
    null_rate = min(1.0, model.entries.get(NULL_VALUE, 0) / model.total)
    return max(0.0 if v in model.entries else null_rate for v in values)


def composite_score(per_feature: Mapping[FeatureKind, float], weights: FeatureWeights) -> float:
    """Weight-normalised sum over kinds that have both a weight and a score."""
    used = {k: w for k, w in weights.active().items() if k in per_feature}
    total = math.fsum(used.values())
    if total <= 0:
        return 0.0
    value = math.fsum(w * per_feature[k] for k, w in used.items()) / total
    # rounding absorbs float noise so rescaled weights give the same decision
    return min(1.0, max(0.0, round(value, COMPOSITE_DIGITS)))


def score_features(
    profile: BehavioralProfile, by_kind: Mapping[FeatureKind, list[str]]
) -> dict[FeatureKind, float]:
    scores: dict[FeatureKind, float] = {}
    for kind in FeatureKind:
        model = profile.model(kind)
        if model is None:
            continue
        values = by_kind.get(kind, [])
        if kind.mandatory:
            scores[kind] = score_mandatory(model, values[0]) if values else 1.0
        else:
            scores[kind] = score_optional(model, values)
    return scores


def score_message(
    profile: BehavioralProfile | None,
    m: Message,
    weights: FeatureWeights,
    tz_offset: int = 0,
    identifier: LanguageIdentifier | None = None,
) -> MessageScore:
    """Score ``m`` against ``profile``; raises ProfileMissing without a profile."""
    if profile is None:
        raise ProfileMissing(m.account_id)
    by_kind = group_by_kind(extract_features(m, tz_offset, identifier))
    per_feature = score_features(profile, by_kind)
    composite = composite_score(per_feature, weights)
    return MessageScore(
        message_id=m.message_id,
        account_id=m.account_id,
        per_feature=per_feature,
        composite=composite,
        violates_profile=composite > weights.threshold,
    )
