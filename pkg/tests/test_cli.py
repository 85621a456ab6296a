import json
from datetime import timedelta

import pytest

from profilewatch.cli import main

from fixtures import START, message, read_jsonl, stable_history, write_jsonl

DAY3 = START + timedelta(days=3)


def run(*argv):
    return main([str(a) for a in argv])


def test_train_counts_and_skips(tmp_path, capsys):
    ms = [message(a, f"{a}{i}", START + timedelta(minutes=i), "some ordinary words to say today", "web") for a in "abc" for i in range(12)]
    ms += [message("d", f"d{i}", START, "short history here", "web") for i in range(9)]
    stream = write_jsonl(tmp_path / "s.jsonl", ms)
    assert run("train", stream, "--store", tmp_path / "store", "--out", tmp_path / "t.jsonl") == 0
    [rec] = read_jsonl(tmp_path / "t.jsonl")
    assert rec["trained"] == 3 and rec["skipped_accounts"] == [{"account_id": "d", "messages": 9}]
    assert (tmp_path / "store" / "applications.json").exists()
    assert "trained 3 profiles, skipped 1" in capsys.readouterr().err

    assert run("show-profile", "a", "--store", tmp_path / "store", "--out", tmp_path / "p.json") == 0
    assert json.loads((tmp_path / "p.json").read_text())["account_id"] == "a"
    assert run("show-profile", "zzz", "--store", tmp_path / "store") == 2


def test_train_empty_and_malformed(tmp_path, caplog):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    assert run("train", empty, "--store", tmp_path / "store") == 0
    assert "empty stream" in caplog.text
    bad = tmp_path / "bad.jsonl"
    bad.write_text("nope\n{}\n", encoding="utf-8")
    assert run("train", bad, "--store", tmp_path / "store") == 2
    mixed = tmp_path / "mixed.jsonl"
    good = json.dumps(message("a", "1", START, "x", "web").to_dict())
    mixed.write_text(f"nope\n{good}\n", encoding="utf-8")
    assert run("train", mixed, "--store", tmp_path / "store") == 0
    assert run("train", tmp_path / "missing.jsonl", "--store", tmp_path / "store") == 2


def _trained_store(tmp_path, accounts):
    history = [m for a in accounts for m in stable_history(a, "SocialFlow", "apnews.example.com")]
    write_jsonl(tmp_path / "h.jsonl", history)
    assert run("train", tmp_path / "h.jsonl", "--store", tmp_path / "store", "--out", tmp_path / "t.jsonl") == 0
    return tmp_path / "store"


def test_score_clean_stream_reports_zero_percent(tmp_path, capsys):
    store = _trained_store(tmp_path, ["ap"])
    ms = [
        message("ap", f"n{i}", DAY3 + timedelta(hours=9 + i % 5, minutes=i), "Officials confirmed the bridge will reopen https://apnews.example.com/x", "SocialFlow")
        for i in range(100)
    ]
    write_jsonl(tmp_path / "m.jsonl", ms)
    capsys.readouterr()
    assert run("score", tmp_path / "m.jsonl", "--store", store, "--out", tmp_path / "o.jsonl") == 0
    lines = read_jsonl(tmp_path / "o.jsonl")
    assert len(lines) == 100 and not any(r["violates_profile"] for r in lines)
    assert "ap: violations 0%" in capsys.readouterr().err


def test_score_flags_novel_source(tmp_path):
    store = _trained_store(tmp_path, ["ap"])
    text = "Markets closed slightly higher today https://apnews.example.com/y"
    ms = [
        message("ap", "ok", DAY3 + timedelta(hours=10), text, "SocialFlow"),
        message("ap", "app-only", DAY3 + timedelta(hours=10), text, "Twitter for iPhone"),
        message("ap", "odd", DAY3 + timedelta(hours=3), text, "Twitter for iPhone"),
    ]
    write_jsonl(tmp_path / "m.jsonl", ms)
    assert run("score", tmp_path / "m.jsonl", "--store", store, "--out", tmp_path / "o.jsonl") == 1
    ok, app_only, odd = read_jsonl(tmp_path / "o.jsonl")
    assert not ok["violates_profile"] and ok["composite"] == 0.0
    # a new app alone weighs 3.3 of 7.51
    assert app_only["composite"] == pytest.approx(3.3 / 7.51)
    assert not app_only["violates_profile"]
    # posted from the new app at an hour the account never uses
    assert odd["per_feature"]["source"] == 1.0 and odd["per_feature"]["time_of_day"] == 1.0
    assert odd["composite"] == pytest.approx((3.3 + 0.88) / 7.51)
    assert odd["violates_profile"]
    assert run("score", tmp_path / "m.jsonl", "--store", store, "--threshold", "0.4", "--out", tmp_path / "o.jsonl") == 1
    assert read_jsonl(tmp_path / "o.jsonl")[1]["violates_profile"]


def test_score_unknown_account_is_unevaluable(tmp_path, capsys):
    store = _trained_store(tmp_path, ["ap"])
    write_jsonl(tmp_path / "m.jsonl", [message("stranger", f"s{i}", DAY3, "hello there everybody", "web") for i in range(3)])
    capsys.readouterr()
    assert run("score", tmp_path / "m.jsonl", "--store", store, "--out", tmp_path / "o.jsonl") == 0
    assert all(r["status"] == "unevaluable" for r in read_jsonl(tmp_path / "o.jsonl"))
    assert "unevaluable 100%" in capsys.readouterr().err


def test_detect_benign_refits_flag_nothing(tmp_path):
    accounts = [f"acct{i}" for i in range(8)]
    store = _trained_store(tmp_path, accounts)
    stream = [
        message(a, f"{a}-n", DAY3 + timedelta(hours=10, minutes=i), "Officials confirmed the bridge will reopen to traffic next week https://apnews.example.com/s", "SocialFlow")
        for i, a in enumerate(accounts)
    ]
    write_jsonl(tmp_path / "s.jsonl", stream)
    assert run("detect", tmp_path / "s.jsonl", "--store", store, "--out", tmp_path / "r.jsonl") == 0
    records = read_jsonl(tmp_path / "r.jsonl")
    assert records[0]["n"] == 8 and not records[0]["compromised"]
    assert records[-1]["groups_compromised"] == 0


def test_detect_chipotle_style_deviation_not_flagged(tmp_path):
    accounts = [f"chip{i}" for i in range(12)]
    store = _trained_store(tmp_path, accounts)
    stream = [
        message(a, f"{a}-x", DAY3 + timedelta(hours=11, minutes=i), f"@fan{i} Thanks for the kind words about the new bridge https://apnews.example.com/c{i}", "SocialFlow")
        for i, a in enumerate(accounts)
    ]
    write_jsonl(tmp_path / "s.jsonl", stream)
    assert run("detect", tmp_path / "s.jsonl", "--store", store, "--out", tmp_path / "r.jsonl") == 0
    group = read_jsonl(tmp_path / "r.jsonl")[0]
    assert group["n"] == 12 and group["violations"] == 0 and not group["compromised"]


def test_detect_exit_codes_and_config(tmp_path):
    accounts = [f"v{i}" for i in range(6)]
    history = [m for a in accounts for m in stable_history(a, "web", "news.example.com")]
    write_jsonl(tmp_path / "h.jsonl", history)
    stream = [
        message(a, f"{a}-spam", DAY3 + timedelta(hours=3, minutes=i), "Lose weight fast with this one weird tea http://tea.example/x", "SpamApp")
        for i, a in enumerate(accounts)
    ]
    write_jsonl(tmp_path / "s.jsonl", stream)
    args = ["detect", tmp_path / "s.jsonl", "--history", tmp_path / "h.jsonl", "--out", tmp_path / "r.jsonl"]
    assert run(*args) == 1
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scoring:\n  threshold: 0.99\n", encoding="utf-8")
    assert run(*args, "--config", cfg) == 0
    cfg.write_text("scoring:\n  thresold: 0.9\n", encoding="utf-8")
    assert run(*args, "--config", cfg) == 2
    assert run(*args, "--allow-list", tmp_path / "missing.txt") == 2
    assert run("detect", tmp_path / "nope.jsonl") == 2
