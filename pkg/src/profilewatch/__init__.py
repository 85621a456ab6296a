"""Compromised-account detection from per-account behavioral profiles.

Messages are compared with a statistical profile of their author's past
behavior; groups of similar messages posted in the same window are flagged
as a campaign when enough members break their authors' habits.
"""

from .campaigns import (
    ApplicationRegistry,
    AppClass,
    CampaignRules,
    GroupVerdict,
    group_threshold,
    judge_group,
    levenshtein,
    levenshtein_ratio,
    mean_pairwise_ratio,
)
from .clustering import MessageGroup, ObservationWindow, SimilarityKind, cluster_messages, cluster_window
from .config import Config
from .errors import (
    ConfigError,
    CorruptProfile,
    ProfileMissing,
    ProfileNotFound,
    ProfileWatchError,
    SimulationSpecError,
    StreamTooShort,
    UnparseableUrl,
)
from .features import extract_features
from .langid import LanguageIdentifier, detect_language
from .model import BehavioralProfile, FeatureKind, FeatureModel, FeatureValue, Message
from .pipeline import Detector, ProfileProvider, read_messages
from .profiles import ProfileStore, build_profile, smooth_time_model
from .scoring import FeatureWeights, MessageScore, composite_score, score_message

__version__ = "0.1.0"

__all__ = [
    "AppClass",
    "ApplicationRegistry",
    "BehavioralProfile",
    "CampaignRules",
    "Config",
    "ConfigError",
    "CorruptProfile",
    "Detector",
    "FeatureKind",
    "FeatureModel",
    "FeatureValue",
    "FeatureWeights",
    "GroupVerdict",
    "LanguageIdentifier",
    "Message",
    "MessageGroup",
    "MessageScore",
    "ObservationWindow",
    "ProfileMissing",
    "ProfileNotFound",
    "ProfileProvider",
    "ProfileStore",
    "ProfileWatchError",
    "SimilarityKind",
    "SimulationSpecError",
    "StreamTooShort",
    "UnparseableUrl",
    "build_profile",
    "cluster_messages",
    "cluster_window",
    "composite_score",
    "detect_language",
    "extract_features",
    "group_threshold",
    "judge_group",
    "levenshtein",
    "levenshtein_ratio",
    "mean_pairwise_ratio",
    "read_messages",
    "score_message",
    "smooth_time_model",
]
