"""Seeded synthetic stream generator with injected campaigns and ground truth.

A simulation spec is a YAML document::

    start: "2026-03-02T14:00:00Z"   # beginning of the detection period
    accounts: 1000
    history: {days: 3, messages: [20, 30]}
    detection: {hours: 1, messages: 2000}
    benign_bulk:
      - app: Foursquare
        template: "I'm at {place} {url}"
        url: "https://4sq.com/{token}"
        places: ["Blue Bottle Coffee", "Central Station Food Court"]
        users: 30
        messages: 20
    campaigns:
      - name: diet
        app: SlimPoster
        template: "Lost ten pounds this week with this tea {url}"
        url: "http://slim-tea.example/{token}"
        start: "2026-03-02T14:20:00Z"
        spread_seconds: 600
        victims: 50
        stealth: none      # all-features, or a list of mimicked feature kinds

Every account gets habits (an active-hour band, one to three client apps,
one or two languages, link domains, a circle of accounts it mentions and a
few hashtags); history and benign detection-period messages are drawn from
those habits with a small amount of off-band noise.  Campaign messages
replace the habits the attacker does not mimic.
"""

from __future__ import annotations

import functools
import json
import random
import re
import string
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Callable

import yaml

from .errors import SimulationSpecError
from .langid import bundled_corpus_dir
from .model import FeatureKind, Message, format_timestamp, parse_timestamp

CLIENT_APPS = (
    "web",
    "Twitter for iPhone",
    "Twitter for Android",
    "TweetDeck",
    "Tweetbot",
    "Echofon",
    "Twitter for iPad",
    "Janetter",
    "Plume",
    "UberSocial",
)
LINK_DOMAINS = (
    "news.example.com",
    "blog.example.org",
    "photos.example.net",
    "video.example.tv",
    "shop.example.com",
    "wiki.example.org",
    "music.example.fm",
    "sports.example.com",
    "recipes.example.net",
    "travel.example.org",
)
HASHTAG_POOL = (
    "football", "music", "travel", "coffee", "news", "weather", "politics",
    "books", "cinema", "running", "cooking", "science", "art", "gaming",
)
LANGUAGE_WEIGHTS = {"en": 0.45, "es": 0.12, "de": 0.1, "fr": 0.1, "pt": 0.1, "it": 0.07, "nl": 0.06}
NOISE_RATE = 0.03
STEALTH_FEATURES = (
    FeatureKind.SOURCE,
    FeatureKind.TIME_OF_DAY,
    FeatureKind.LANGUAGE,
    FeatureKind.LINK,
    FeatureKind.DIRECT_INTERACTION,
    FeatureKind.TOPIC,
)

_WORD_RE = re.compile(r"[^\W\d_]{3,}")


@functools.lru_cache(maxsize=None)
def vocabulary(language: str) -> tuple[str, ...]:
    text = (bundled_corpus_dir() / f"{language}.txt").read_text(encoding="utf-8")
    return tuple(sorted(set(_WORD_RE.findall(text.lower()))))


# --------------------------------------------------------------------- spec


@dataclass(frozen=True)
class BulkSpec:
    app: str
    template: str
    url: str
    places: tuple[str, ...]
    users: int
    messages: int


@dataclass(frozen=True)
class CampaignSpec:
    name: str
    app: str
    template: str
    url: str | None
    start: datetime
    spread_seconds: int
    victims: int
    stealth: frozenset[FeatureKind]
    language: str
    hashtags: tuple[str, ...]
    victims_line: int | None = None


@dataclass(frozen=True)
class SimulationSpec:
    start: datetime
    accounts: int
    history_days: float
    history_messages: tuple[int, int]
    detection_hours: float
    detection_messages: int
    benign_bulk: tuple[BulkSpec, ...] = ()
    campaigns: tuple[CampaignSpec, ...] = ()
    seed: int | None = None

    @property
    def end(self) -> datetime:
        return self.start + timedelta(hours=self.detection_hours)


def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


class _Section:
    """A YAML mapping node with typed, line-aware accessors."""

    def __init__(self, node: yaml.Node, what: str):
        if not isinstance(node, yaml.MappingNode):
            raise SimulationSpecError(f"{what} must be a mapping", _line(node))
        self.node = node
        self.what = what
        self.items: dict[str, yaml.Node] = {}
        for k, v in node.value:
            self.items[str(k.value)] = v

    def reject_unknown(self, allowed: set[str]) -> None:
        for k, v in self.node.value:
            if k.value not in allowed:
                raise SimulationSpecError(f"unknown key {k.value!r} in {self.what}", _line(k))

    def line(self, key: str) -> int:
        node = self.items.get(key)
        return _line(node if node is not None else self.node)

    def value(self, key: str, default: Any = ..., convert: Callable[[Any], Any] | None = None) -> Any:
        node = self.items.get(key)
        if node is None:
            if default is ...:
                raise SimulationSpecError(f"{self.what} is missing {key!r}", _line(self.node))
            return default
        raw = yaml.SafeLoader("").construct_object(node, deep=True)
        if convert is None:
            return raw
        try:
            return convert(raw)
        except (TypeError, ValueError) as exc:
            raise SimulationSpecError(f"bad value for {key!r}: {exc}", _line(node)) from None


def _positive_int(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValueError(f"expected a non-negative integer, got {v!r}")
    return v


def _number(v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
        raise ValueError(f"expected a positive number, got {v!r}")
    return float(v)


def _instant(v: Any) -> datetime:
    if isinstance(v, datetime):
        if v.tzinfo is None:
            v = v.replace(tzinfo=timezone.utc)
        return v.astimezone(timezone.utc).replace(microsecond=0)
    return parse_timestamp(v)


def _text(v: Any) -> str:
    if not isinstance(v, str) or not v.strip():
        raise ValueError("expected a non-empty string")
    return v


def _range(v: Any) -> tuple[int, int]:
    if isinstance(v, int) and not isinstance(v, bool):
        v = [v, v]
    if not isinstance(v, list) or len(v) != 2:
        raise ValueError("expected an integer or a [low, high] pair")
    lo, hi = (_positive_int(x) for x in v)
    if lo > hi:
        raise ValueError(f"low {lo} exceeds high {hi}")
    return lo, hi


def _strings(v: Any) -> tuple[str, ...]:
    if not isinstance(v, list) or not all(isinstance(x, str) and x for x in v):
        raise ValueError("expected a list of strings")
    return tuple(v)


def _stealth(v: Any) -> frozenset[FeatureKind]:
    if v is None or v == "none":
        return frozenset()
    if v == "all-features":
        return frozenset(STEALTH_FEATURES)
    if isinstance(v, str):
        v = [v]
    if not isinstance(v, list):
        raise ValueError("expected none, all-features or a list of feature kinds")
    out = set()
    for name in v:
        kind = FeatureKind(name)
        if kind not in STEALTH_FEATURES:
            raise ValueError(f"feature {name!r} cannot be mimicked")
        out.add(kind)
    return frozenset(out)


def _seq(node: yaml.Node | None, what: str) -> list[yaml.Node]:
    if node is None:
        return []
    if isinstance(node, yaml.ScalarNode) and node.tag.endswith(":null"):
        return []
    if not isinstance(node, yaml.SequenceNode):
        raise SimulationSpecError(f"{what} must be a list", _line(node))
    return list(node.value)


def parse_spec(text: str) -> SimulationSpec:
    """Parse and validate a spec document; errors carry the line number."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SimulationSpecError(
            f"invalid YAML: {getattr(exc, 'problem', exc)}",
            None if mark is None else mark.line + 1,
        ) from None
    if root is None:
        raise SimulationSpecError("empty simulation spec", 1)
    top = _Section(root, "spec")
    top.reject_unknown(
        {"start", "accounts", "history", "detection", "benign_bulk", "campaigns", "seed"}
    )
    start = top.value("start", convert=_instant)
    accounts = top.value("accounts", convert=_positive_int)
    if accounts < 1:
        raise SimulationSpecError("accounts must be at least 1", top.line("accounts"))

    hist_node = top.items.get("history")
    hist = _Section(hist_node, "history") if hist_node is not None else None
    if hist:
        hist.reject_unknown({"days", "messages"})
    history_days = hist.value("days", 3, _number) if hist else 3.0
    history_messages = hist.value("messages", [20, 30], _range) if hist else (20, 30)

    det_node = top.items.get("detection")
    det = _Section(det_node, "detection") if det_node is not None else None
    if det:
        det.reject_unknown({"hours", "messages"})
    detection_hours = det.value("hours", 1, _number) if det else 1.0
    detection_messages = det.value("messages", accounts, _positive_int) if det else accounts

    bulks = []
    for node in _seq(top.items.get("benign_bulk"), "benign_bulk"):
        sec = _Section(node, "benign_bulk entry")
        sec.reject_unknown({"app", "template", "url", "places", "users", "messages"})
        users = sec.value("users", convert=_positive_int)
        if users > accounts:
            raise SimulationSpecError(
                f"benign_bulk users ({users}) exceed accounts ({accounts})", sec.line("users")
            )
        bulks.append(
            BulkSpec(
                app=sec.value("app", convert=_text),
                template=sec.value("template", convert=_text),
                url=sec.value("url", "https://checkin.example.com/{token}", _text),
                places=sec.value("places", ["Central Station", "City Library Reading Room"], _strings),
                users=users,
                messages=sec.value("messages", 10, _positive_int),
            )
        )

    campaigns = []
    for node in _seq(top.items.get("campaigns"), "campaigns"):
        sec = _Section(node, "campaign")
        sec.reject_unknown(
            {"name", "app", "template", "url", "start", "spread_seconds", "victims",
             "stealth", "language", "hashtags"}
        )
        c_start = sec.value("start", start, _instant)
        spread = sec.value("spread_seconds", 600, _positive_int)
        if not start <= c_start < start + timedelta(hours=detection_hours):
            raise SimulationSpecError(
                "campaign start must fall inside the detection period", sec.line("start")
            )
        language = sec.value("language", "en", _text)
        if language not in LANGUAGE_WEIGHTS:
            raise SimulationSpecError(f"unknown language {language!r}", sec.line("language"))
        campaigns.append(
            CampaignSpec(
                name=sec.value("name", f"campaign{len(campaigns)}", _text),
                app=sec.value("app", convert=_text),
                template=sec.value("template", convert=_text),
                url=sec.value("url", None, lambda v: None if v is None else _text(v)),
                start=c_start,
                spread_seconds=spread,
                victims=sec.value("victims", convert=_positive_int),
                stealth=sec.value("stealth", "none", _stealth),
                language=language,
                hashtags=sec.value("hashtags", [], _strings),
                victims_line=sec.line("victims"),
            )
        )
    seed = top.value("seed", None, lambda v: None if v is None else int(v))
    return SimulationSpec(
        start=start,
        accounts=accounts,
        history_days=history_days,
        history_messages=history_messages,
        detection_hours=detection_hours,
        detection_messages=detection_messages,
        benign_bulk=tuple(bulks),
        campaigns=tuple(campaigns),
        seed=seed,
    )


def load_spec(path: str | Path) -> SimulationSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


# ------------------------------------------------------------------ habits


@dataclass
class Habits:
    account_id: str
    band_start: int
    band_width: int
    sources: tuple[str, ...]
    source_weights: tuple[float, ...]
    languages: tuple[str, ...]
    language_weights: tuple[float, ...]
    link_rate: float
    domains: tuple[str, ...]
    mention_rate: float
    circle: tuple[str, ...]
    hashtag_rate: float
    hashtags: tuple[str, ...]
    bulk_apps: list[str] = field(default_factory=list)

    def band(self) -> list[int]:
        return [(self.band_start + i) % 24 for i in range(self.band_width)]

    def in_band(self, hour: int, margin: int = 0) -> bool:
        offset = (hour - self.band_start) % 24
        return offset < self.band_width + margin or offset >= 24 - margin


def _account_id(i: int) -> str:
    return f"user{i:05d}"


def make_habits(rng: random.Random, n_accounts: int) -> list[Habits]:
    langs, lang_w = zip(*LANGUAGE_WEIGHTS.items())
    out = []
    for i in range(n_accounts):
        n_src = rng.choice((1, 1, 2, 2, 3))
        sources = tuple(rng.sample(CLIENT_APPS, n_src))
        primary = rng.choices(langs, lang_w)[0]
        languages = (primary,)
        if rng.random() < 0.2:
            languages += (rng.choice([x for x in langs if x != primary]),)
        others = [_account_id(j) for j in range(n_accounts) if j != i] if n_accounts < 50 else None
        circle_size = rng.randint(0, 5)
        if others is not None:
            circle = tuple(rng.sample(others, min(circle_size, len(others))))
        else:
            circle = tuple(
                _account_id(j) for j in sorted(
                    {(i + rng.randrange(1, n_accounts)) % n_accounts for _ in range(circle_size)}
                )
            )
        out.append(
            Habits(
                account_id=_account_id(i),
                band_start=rng.randrange(24),
                band_width=rng.randint(4, 8),
                sources=sources,
                source_weights=tuple([6.0] + [1.0] * (n_src - 1)),
                languages=languages,
                language_weights=(0.85, 0.15)[: len(languages)] if len(languages) > 1 else (1.0,),
                link_rate=rng.uniform(0.0, 0.6),
                domains=tuple(rng.sample(LINK_DOMAINS, rng.randint(1, 3))),
                mention_rate=rng.uniform(0.0, 0.5) if circle else 0.0,
                circle=circle,
                hashtag_rate=rng.uniform(0.0, 0.3),
                hashtags=tuple(rng.sample(HASHTAG_POOL, rng.randint(1, 3))),
            )
        )
    return out


def _token(rng: random.Random, n: int = 8) -> str:
    return "".join(rng.choice(string.ascii_lowercase + string.digits) for _ in range(n))


def _words(rng: random.Random, language: str, k: int) -> str:
    return " ".join(rng.choice(vocabulary(language)) for _ in range(k))


@dataclass
class _Draft:
    account_id: str
    timestamp: datetime
    text: str
    source_app: str
    campaign: str | None = None


def _habitual_text(rng: random.Random, h: Habits) -> str:
    language = rng.choices(h.languages, h.language_weights)[0]
    parts = [_words(rng, language, rng.randint(8, 16))]
    if h.circle and rng.random() < h.mention_rate:
        parts.insert(0, "@" + rng.choice(h.circle))
    if rng.random() < h.hashtag_rate:
        parts.append("#" + rng.choice(h.hashtags))
    if rng.random() < h.link_rate:
        parts.append(f"https://{rng.choice(h.domains)}/{_token(rng)}")
    return " ".join(parts)


def _habitual_hour(rng: random.Random, h: Habits) -> int:
    if rng.random() < NOISE_RATE:
        return rng.randrange(24)
    return rng.choice(h.band())


def _at_hour(rng: random.Random, day: datetime, hour: int) -> datetime:
    return day.replace(hour=hour, minute=0, second=0) + timedelta(seconds=rng.randrange(3600))


def _history(rng: random.Random, spec: SimulationSpec, h: Habits) -> list[_Draft]:
    lo, hi = spec.history_messages
    drafts = []
    first_day = (spec.start - timedelta(days=spec.history_days)).replace(
        hour=0, minute=0, second=0
    )
    span_days = max(1, int((spec.start - first_day).total_seconds() // 86400) + 1)
    attempts = 0
    target = rng.randint(lo, hi)
    while len(drafts) < target and attempts < target * 50:
        attempts += 1
        day = first_day + timedelta(days=rng.randrange(span_days))
        ts = _at_hour(rng, day, _habitual_hour(rng, h))
        if not spec.start - timedelta(days=spec.history_days) <= ts < spec.start:
            continue
        if h.bulk_apps and rng.random() < 0.2:
            drafts.append(_Draft(h.account_id, ts, "", rng.choice(h.bulk_apps)))
            continue
        source = rng.choices(h.sources, h.source_weights)[0]
        drafts.append(_Draft(h.account_id, ts, _habitual_text(rng, h), source))
    return drafts


def _bulk_text(rng: random.Random, bulk: BulkSpec) -> str:
    url = bulk.url.replace("{token}", _token(rng))
    return bulk.template.replace("{place}", rng.choice(bulk.places)).replace("{url}", url)


def _pick_victims(
    rng: random.Random, campaign: CampaignSpec, habits: list[Habits], taken: set[str]
) -> list[Habits]:
    hour = campaign.start.hour
    mimic_time = FeatureKind.TIME_OF_DAY in campaign.stealth
    mimic_lang = FeatureKind.LANGUAGE in campaign.stealth
    eligible = []
    for h in habits:
        if h.account_id in taken:
            continue
        if mimic_time != h.in_band(hour, margin=0 if mimic_time else 1):
            continue
        if mimic_lang and h.languages[0] != campaign.language:
            continue
        eligible.append(h)
    if len(eligible) < campaign.victims:
        raise SimulationSpecError(
            f"campaign {campaign.name!r}: only {len(eligible)} accounts match its "
            f"stealth constraints, {campaign.victims} victims requested",
            campaign.victims_line,
        )
    return sorted(rng.sample(eligible, campaign.victims), key=lambda h: h.account_id)


def _campaign_draft(rng: random.Random, campaign: CampaignSpec, h: Habits) -> _Draft:
    stealth = campaign.stealth
    ts = campaign.start + timedelta(seconds=rng.randrange(max(1, campaign.spread_seconds)))
    if FeatureKind.LINK in stealth:
        url = f"https://{rng.choice(h.domains)}/{_token(rng)}"
    elif campaign.url:
        url = campaign.url.replace("{token}", _token(rng))
    else:
        url = ""
    text = campaign.template.replace("{url}", url).strip()
    if FeatureKind.LANGUAGE in stealth:
        text = f"{text} {_words(rng, h.languages[0], 10)}"
    if FeatureKind.DIRECT_INTERACTION in stealth and h.circle and h.mention_rate > 0:
        text = f"@{rng.choice(h.circle)} {text}"
    if FeatureKind.TOPIC in stealth and h.hashtag_rate > 0:
        text = f"{text} #{rng.choice(h.hashtags)}"
    elif FeatureKind.TOPIC not in stealth:
        text = " ".join([text] + ["#" + t for t in campaign.hashtags])
    source = h.sources[0] if FeatureKind.SOURCE in stealth else campaign.app
    return _Draft(h.account_id, ts, text, source, campaign.name)


@dataclass(frozen=True)
class SimulationOutput:
    history: list[Message]
    stream: list[Message]
    truth: list[dict[str, str]]


def _finalize(drafts: list[_Draft], prefix: str) -> list[tuple[Message, str | None]]:
    drafts.sort(key=lambda d: (d.timestamp, d.account_id, d.text, d.source_app))
    return [
        (Message(f"{prefix}{i:07d}", d.account_id, d.timestamp, d.text, d.source_app), d.campaign)
        for i, d in enumerate(drafts)
    ]


def simulate(spec: SimulationSpec, seed: int | None = None) -> SimulationOutput:
    """Generate history, detection stream and ground truth; pure in (spec, seed)."""
    seed = seed if seed is not None else (spec.seed or 0)
    rng = random.Random(f"simulate:{seed}")
    habits = make_habits(rng, spec.accounts)

    for bulk in spec.benign_bulk:
        for h in rng.sample(habits, bulk.users):
            h.bulk_apps.append(bulk.app)
    bulk_by_app = {b.app: b for b in spec.benign_bulk}

    history: list[_Draft] = []
    for h in habits:
        for d in _history(rng, spec, h):
            if d.source_app in bulk_by_app:
                d.text = _bulk_text(rng, bulk_by_app[d.source_app])
            history.append(d)

    stream: list[_Draft] = []
    seconds = int(spec.detection_hours * 3600)
    active_by_hour = {hour: [h for h in habits if h.in_band(hour)] or habits for hour in range(24)}
    for _ in range(spec.detection_messages):
        ts = spec.start + timedelta(seconds=rng.randrange(seconds))
        active = active_by_hour[ts.hour]
        h = rng.choice(active) if rng.random() >= NOISE_RATE else rng.choice(habits)
        stream.append(
            _Draft(h.account_id, ts, _habitual_text(rng, h), rng.choices(h.sources, h.source_weights)[0])
        )
    for bulk in spec.benign_bulk:
        users = [h for h in habits if bulk.app in h.bulk_apps]
        for _ in range(bulk.messages):
            h = rng.choice(users)
            ts = spec.start + timedelta(seconds=rng.randrange(seconds))
            stream.append(_Draft(h.account_id, ts, _bulk_text(rng, bulk), bulk.app))

    taken: set[str] = set()
    for campaign in spec.campaigns:
        for h in _pick_victims(rng, campaign, habits, taken):
            taken.add(h.account_id)
            d = _campaign_draft(rng, campaign, h)
            if d.timestamp >= spec.end:
                d.timestamp = spec.end - timedelta(seconds=1)
            stream.append(d)

    hist_msgs = [m for m, _ in _finalize(history, "h")]
    finalized = _finalize(stream, "m")
    truth = [
        {"account_id": m.account_id, "message_id": m.message_id, "campaign": c}
        for m, c in finalized
        if c is not None
    ]
    return SimulationOutput(hist_msgs, [m for m, _ in finalized], truth)


def write_outputs(output: SimulationOutput, out_dir: str | Path) -> dict[str, Path]:
    """Write ``history.jsonl``, ``stream.jsonl`` and ``truth.jsonl``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "history": out_dir / "history.jsonl",
        "stream": out_dir / "stream.jsonl",
        "truth": out_dir / "truth.jsonl",
    }
    for name, msgs in (("history", output.history), ("stream", output.stream)):
        with open(paths[name], "w", encoding="utf-8", newline="\n") as fh:
            for m in msgs:
                fh.write(json.dumps(m.to_dict(), ensure_ascii=False) + "\n")
    with open(paths["truth"], "w", encoding="utf-8", newline="\n") as fh:
        for row in output.truth:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return paths


def describe(output: SimulationOutput) -> dict[str, Any]:
    return {
        "history_messages": len(output.history),
        "stream_messages": len(output.stream),
        "injected": len(output.truth),
        "first": format_timestamp(output.stream[0].timestamp) if output.stream else None,
    }
