"""Run configuration: one YAML (or JSON) document with a section per concern.

Example::

    scoring:
      preset: twitter          # or facebook
      weights: {topic: 0.0}    # per-kind overrides on top of the preset
      threshold: 0.5
    profiles:
      min_messages: 10
      history_days: 3
      history_messages: 400
      tz_offsets: {some_account: -300}
    clustering:
      window_seconds: 3600
      min_group_size: 2
    campaign:
      slope: -0.005
      intercept: 0.82
      floor: 0.1
      bulk_cutoff: 0.35
      popularity_cutoff: 1000000
      sample_size: 10
      allow_list: null         # path, one application name per line
      budget: null             # max profile builds per window
    seed: 0
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .campaigns import CampaignRules
from .clustering import MIN_GROUP_SIZE, TWITTER_WINDOW_SECONDS
from .errors import ConfigError
from .model import FeatureKind
from .profiles import MIN_STREAM_LENGTH
from .scoring import DEFAULT_THRESHOLD, PRESETS, FeatureWeights


@dataclass(frozen=True)
class ScoringConfig:
    preset: str = "twitter"
    weights: Mapping[str, float] = field(default_factory=dict)
    threshold: float = DEFAULT_THRESHOLD

    def feature_weights(self) -> FeatureWeights:
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown weights preset {self.preset!r}")
        merged = dict(PRESETS[self.preset])
        for name, w in self.weights.items():
            try:
                merged[FeatureKind(name)] = float(w)
            except ValueError:
                raise ConfigError(f"unknown feature kind {name!r} in scoring.weights") from None
        try:
            return FeatureWeights(merged, float(self.threshold))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class ProfileConfig:
    min_messages: int = MIN_STREAM_LENGTH
    history_days: float = 3
    history_messages: int = 400
    tz_offsets: Mapping[str, int] = field(default_factory=dict)

    def tz_offset(self, account_id: str) -> int:
        return int(self.tz_offsets.get(account_id, 0))


@dataclass(frozen=True)
class ClusteringConfig:
    window_seconds: int = TWITTER_WINDOW_SECONDS
    min_group_size: int = MIN_GROUP_SIZE


@dataclass(frozen=True)
class CampaignConfig:
    slope: float = -0.005
    intercept: float = 0.82
    floor: float = 0.1
    bulk_cutoff: float = 0.35
    popularity_cutoff: float = 1_000_000
    sample_size: int = 10
    allow_list: str | None = None
    budget: int | None = None

    def rules(self) -> CampaignRules:
        return CampaignRules(
            slope=self.slope,
            intercept=self.intercept,
            floor=self.floor,
            bulk_cutoff=self.bulk_cutoff,
            popularity_cutoff=self.popularity_cutoff,
        )

    def allowed_apps(self) -> frozenset[str]:
        if not self.allow_list:
            return frozenset()
        try:
            lines = Path(self.allow_list).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read allow-list {self.allow_list}: {exc}") from None
        return frozenset(line.strip() for line in lines if line.strip() and not line.startswith("#"))


@dataclass(frozen=True)
class Config:
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    profiles: ProfileConfig = field(default_factory=ProfileConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    seed: int = 0

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> "Config":
        data = dict(data or {})
        sections = {
            "scoring": ScoringConfig,
            "profiles": ProfileConfig,
            "clustering": ClusteringConfig,
            "campaign": CampaignConfig,
        }
        unknown = set(data) - set(sections) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for name, section_cls in sections.items():
            raw = data.get(name) or {}
            if not isinstance(raw, Mapping):
                raise ConfigError(f"config section {name!r} must be a mapping")
            allowed = {f.name for f in fields(section_cls)}
            bad = set(raw) - allowed
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            kwargs[name] = section_cls(**raw)
        if "seed" in data:
            kwargs["seed"] = int(data["seed"])
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def load(cls, path: str | Path | None) -> "Config":
        if path is None:
            return cls()
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if data is not None and not isinstance(data, Mapping):
            raise ConfigError(f"config {path} must be a mapping at top level")
        return cls.from_mapping(data)

    def validate(self) -> None:
        self.scoring.feature_weights()
        if self.profiles.min_messages < 1:
            raise ConfigError("profiles.min_messages must be positive")
        if self.clustering.window_seconds <= 0:
            raise ConfigError("clustering.window_seconds must be positive")
        if self.clustering.min_group_size < 2:
            raise ConfigError("clustering.min_group_size must be at least 2")
        if self.campaign.budget is not None and self.campaign.budget < 0:
            raise ConfigError("campaign.budget must be non-negative")
        if self.campaign.sample_size < 2:
            raise ConfigError("campaign.sample_size must be at least 2")

    def with_overrides(
        self,
        *,
        preset: str | None = None,
        threshold: float | None = None,
        window_seconds: int | None = None,
        allow_list: str | None = None,
        budget: int | None = None,
        seed: int | None = None,
    ) -> "Config":
        """Apply command-line flags on top of the file settings."""
        scoring, clustering, campaign = self.scoring, self.clustering, self.campaign
        if preset is not None:
            scoring = replace(scoring, preset=preset)
        if threshold is not None:
            scoring = replace(scoring, threshold=threshold)
        if window_seconds is not None:
            clustering = replace(clustering, window_seconds=window_seconds)
        if allow_list is not None:
            campaign = replace(campaign, allow_list=allow_list)
        if budget is not None:
            campaign = replace(campaign, budget=budget)
        config = replace(
            self,
            scoring=scoring,
            clustering=clustering,
            campaign=campaign,
            seed=self.seed if seed is None else seed,
        )
        config.validate()
        return config
