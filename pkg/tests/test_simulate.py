import pytest

from profilewatch.cli import main
from profilewatch.errors import SimulationSpecError
from profilewatch.simulate import parse_spec, simulate

from fixtures import campaign_spec, read_jsonl


def _run(tmp_path, spec_text, seed, name):
    spec = tmp_path / f"{name}.yaml"
    spec.write_text(spec_text, encoding="utf-8")
    out = tmp_path / name
    assert main(["simulate", str(spec), "--seed", str(seed), "--out", str(out)]) == 0
    return out


def test_campaign_ground_truth(tmp_path):
    out = _run(tmp_path, campaign_spec(accounts=200, messages=300, bulk_users=10, bulk_messages=5), 1, "a")
    truth = read_jsonl(out / "truth.jsonl")
    assert len(truth) == 50 and len({t["account_id"] for t in truth}) == 50
    stream = {r["message_id"]: r for r in read_jsonl(out / "stream.jsonl")}
    for t in truth:
        assert stream[t["message_id"]]["account_id"] == t["account_id"]
        assert stream[t["message_id"]]["source_app"] == "SlimPoster"
    history = read_jsonl(out / "history.jsonl")
    per_account = {}
    for r in history:
        per_account[r["account_id"]] = per_account.get(r["account_id"], 0) + 1
    assert len(per_account) == 200 and min(per_account.values()) >= 20
    assert max(r["timestamp"] for r in history) < min(r["timestamp"] for r in stream.values())


def test_same_seed_same_bytes(tmp_path):
    text = campaign_spec(accounts=200, messages=300, bulk_users=10, bulk_messages=5)
    a = _run(tmp_path, text, 9, "a")
    b = _run(tmp_path, text, 9, "b")
    c = _run(tmp_path, text, 10, "c")
    for name in ("history.jsonl", "stream.jsonl", "truth.jsonl"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "stream.jsonl").read_bytes() != (c / "stream.jsonl").read_bytes()


def test_all_features_stealth_evades_detection(tmp_path):
    out = _run(tmp_path, campaign_spec(accounts=400, messages=300, victims=30, stealth="all-features"), 2, "s")
    truth = read_jsonl(out / "truth.jsonl")
    assert len(truth) == 30
    report = tmp_path / "r.jsonl"
    main(["detect", str(out / "stream.jsonl"), "--history", str(out / "history.jsonl"), "--out", str(report)])
    flagged = set(read_jsonl(report)[-1]["flagged_accounts"])
    victims = {t["account_id"] for t in truth}
    assert len(flagged & victims) <= len(victims) // 10


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("accounts: 10\n", 1, "missing 'start'"),
        ('start: "2026-03-02T14:00:00Z"\naccounts: -3\n', 2, "accounts"),
        ('start: "2026-03-02T14:00:00Z"\naccounts: 10\ncolour: red\n', 3, "unknown key"),
        ('start: "2026-03-02T14:00:00Z"\naccounts: 10\ncampaigns:\n  - app: X\n    template: t\n    stealth: [wings]\n    victims: 2\n', 6, "stealth"),
        ('start: "2026-03-02T14:00:00Z"\naccounts: 10\ncampaigns:\n  - app: X\n    template: t\n    start: "2030-01-01T00:00:00Z"\n    victims: 2\n', 6, "detection period"),
        ('start: "2026-03-02T14:00:00Z"\naccounts: [1\n', 3, "invalid YAML"),
        ("start: nonsense\naccounts: 3\n", 1, "start"),
    ],
)
def test_spec_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(SimulationSpecError) as exc:
        parse_spec(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")
    assert fragment in str(exc.value)


def test_too_many_victims_is_reported_at_the_victims_line():
    spec = parse_spec(
        'start: "2026-03-02T14:00:00Z"\naccounts: 20\ncampaigns:\n  - app: X\n    template: "buy {url}"\n    victims: 500\n'
    )
    with pytest.raises(SimulationSpecError) as exc:
        simulate(spec, 1)
    assert exc.value.line == 6


def test_cli_reports_bad_spec(tmp_path, capsys):
    spec = tmp_path / "bad.yaml"
    spec.write_text("accounts: 3\n", encoding="utf-8")
    assert main(["simulate", str(spec), "--out", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["simulate", str(spec)]) == 2
