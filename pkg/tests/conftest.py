from __future__ import annotations

import itertools
from datetime import datetime, timedelta, timezone

import pytest

from profilewatch.model import Message

BASE = datetime(2026, 3, 2, 12, 0, tzinfo=timezone.utc)
_ids = itertools.count()

EN_TEXT = "The quick brown fox jumps over the lazy dog repeatedly"
DE_TEXT = "Der schnelle braune Fuchs springt über den faulen Hund"


def msg(
    account: str = "alice",
    *,
    text: str = EN_TEXT,
    source: str = "web",
    at: datetime | None = None,
    minutes: int = 0,
    **extra,
) -> Message:
    return Message(
        message_id=extra.pop("message_id", f"m{next(_ids)}"),
        account_id=account,
        timestamp=(at or BASE) + timedelta(minutes=minutes),
        text=text,
        source_app=source,
        **extra,
    )


@pytest.fixture
def make_msg():
    return msg


ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        name, ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {name}: {detail}")
