"""Hand-built message streams shared by the pipeline and acceptance tests."""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

from profilewatch.model import Message

START = datetime(2026, 3, 2, 0, 0, tzinfo=timezone.utc)

HEADLINES = [
    "Officials confirmed the bridge will reopen to traffic next week",
    "The city council approved a new budget for public libraries",
    "Heavy rain is expected across the northern region this weekend",
    "Scientists published new findings about coral reefs and warming oceans",
    "The national team announced its squad for the summer tournament",
    "Markets closed slightly higher after a quiet day of trading",
    "Firefighters contained the blaze before it reached the nearby houses",
    "A new exhibition of modern paintings opens at the museum tomorrow",
    "Train services between the two cities will resume on Monday morning",
    "The company reported stronger sales than analysts had predicted",
]


def stable_history(account, source, domain, hours=(9, 10, 11, 12, 13, 14), days=3, per_day=10, mention=None):
    """A very regular account: one app, always links to one domain, fixed hours."""
    out = []
    for d in range(days):
        for k in range(per_day):
            hour = hours[k % len(hours)]
            text = HEADLINES[(d * per_day + k) % len(HEADLINES)]
            if mention:
                text = f"@{mention} {text}"
            out.append(
                Message(
                    message_id=f"{account}-h{d:02d}{k:02d}",
                    account_id=account,
                    timestamp=START + timedelta(days=d, hours=hour, minutes=7 + k),
                    text=f"{text} https://{domain}/story/{d}{k}",
                    source_app=source,
                )
            )
    return out


def message(account, mid, when, text, source, **kw):
    return Message(message_id=mid, account_id=account, timestamp=when, text=text, source_app=source, **kw)


def write_jsonl(path: Path, messages) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(json.dumps(m.to_dict(), ensure_ascii=False) + "\n")
    return path


def read_jsonl(path: Path):
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line]


CAMPAIGN_SPEC = """\
start: "2026-03-02T14:00:00Z"
accounts: {accounts}
history: {{days: 3, messages: [20, 30]}}
detection: {{hours: 1, messages: {messages}}}
benign_bulk:
  - app: Foursquare
    template: "I'm at {{place}} {{url}}"
    url: "https://4sq.example.com/{{token}}"
    places: ["Blue Bottle Coffee Roasters", "Central Station Food Court", "City Library Reading Room"]
    users: {bulk_users}
    messages: {bulk_messages}
campaigns:
  - name: diet
    app: SlimPoster
    template: "Lost ten pounds this week with this amazing green tea {{url}}"
    url: "http://slim-tea.example/{{token}}"
    start: "2026-03-02T14:20:00Z"
    victims: {victims}
    stealth: {stealth}
"""


def campaign_spec(accounts=1000, messages=1500, victims=50, stealth="none", bulk_users=40, bulk_messages=25):
    return CAMPAIGN_SPEC.format(
        accounts=accounts,
        messages=messages,
        victims=victims,
        stealth=stealth,
        bulk_users=bulk_users,
        bulk_messages=bulk_messages,
    )
