"""Command-line entry point: ``profilewatch {train,score,detect,simulate,show-profile}``.

Exit codes: 0 clean, 1 detections (violations or compromised groups), 2 input
errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from .campaigns import ApplicationRegistry
from .config import Config
from .errors import ConfigError, CorruptProfile, ProfileNotFound, SimulationSpecError
from .pipeline import (
    REGISTRY_FILE,
    Detector,
    HistoryIndex,
    ProfileProvider,
    ReadStats,
    read_messages,
    score_messages,
    train_profiles,
)
from .profiles import ProfileStore
from .scoring import PRESETS
from .simulate import describe, load_spec, simulate, write_outputs

EXIT_CLEAN = 0
EXIT_DETECTIONS = 1
EXIT_INPUT_ERROR = 2

log = logging.getLogger("profilewatch")


class InputError(Exception):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML/JSON configuration file")
    parser.add_argument("--store", help="profile store directory")
    parser.add_argument("--out", help="write JSONL output here instead of stdout")
    parser.add_argument("--seed", type=int, help="run seed (sampling, simulation)")
    parser.add_argument("--window-seconds", type=int, help="observation window length")
    parser.add_argument("--weights-preset", choices=sorted(PRESETS), help="feature weight preset")
    parser.add_argument("--threshold", type=float, help="composite score violation threshold")
    parser.add_argument("--allow-list", help="file of trusted application names, one per line")
    parser.add_argument("--budget", type=int, help="profile builds allowed per window")
    parser.add_argument("--history", help="JSONL file of earlier messages to build profiles from")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="profilewatch",
        description="Detect compromised social-network accounts from behavioral profiles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="build profiles from a message stream into the store")
    p.add_argument("stream", help="JSONL message stream")
    _common(p)

    p = sub.add_parser("score", help="score messages against their accounts' profiles")
    p.add_argument("messages", help="JSONL messages to score")
    _common(p)

    p = sub.add_parser("detect", help="window, cluster, score and judge a stream")
    p.add_argument("stream", help="JSONL message stream")
    _common(p)

    p = sub.add_parser("simulate", help="generate a synthetic stream with injected campaigns")
    p.add_argument("spec", help="YAML simulation spec")
    _common(p)

    p = sub.add_parser("show-profile", help="print a stored profile")
    p.add_argument("account_id")
    _common(p)
    return parser


def _config(args: argparse.Namespace) -> Config:
    return Config.load(args.config).with_overrides(
        preset=args.weights_preset,
        threshold=args.threshold,
        window_seconds=args.window_seconds,
        allow_list=args.allow_list,
        budget=args.budget,
        seed=args.seed,
    )


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def _emit(fh: TextIO, record: dict) -> None:
    fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _read(path: str, what: str):
    try:
        messages, stats = read_messages(path)
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from None
    _report_stats(path, stats)
    return messages, stats


def _report_stats(path: str, stats: ReadStats) -> None:
    if stats.malformed or stats.duplicates:
        log.warning(
            "%s: skipped %d malformed and %d duplicate lines of %d",
            path, stats.malformed, stats.duplicates, stats.lines,
        )
        for err in stats.errors[:5]:
            log.warning("  %s", err)


def _store(args: argparse.Namespace, required: bool = False) -> ProfileStore | None:
    if args.store is None:
        if required:
            raise InputError("--store is required for this command")
        return None
    return ProfileStore(args.store)


def _history(args: argparse.Namespace) -> HistoryIndex:
    if args.history is None:
        return HistoryIndex()
    messages, _ = _read(args.history, "history")
    return HistoryIndex(messages)


def cmd_train(args: argparse.Namespace) -> int:
    config = _config(args)
    store = _store(args, required=True)
    messages, stats = _read(args.stream, "stream")
    if stats.lines and not messages:
        raise InputError(f"{args.stream}: all {stats.lines} lines are malformed")
    if not stats.lines:
        log.warning("%s: empty stream, no profiles trained", args.stream)
    profiles, skipped = train_profiles(messages, config)
    for acct in sorted(profiles):
        store.save(profiles[acct])
    registry_path = Path(store.root) / REGISTRY_FILE
    registry = ApplicationRegistry.load(
        registry_path, seed=config.seed, sample_size=config.campaign.sample_size
    )
    registry.observe_all(sorted(messages, key=lambda m: (m.timestamp, m.message_id)))
    registry.save(registry_path)
    with _output(args.out) as fh:
        _emit(
            fh,
            {
                "record": "train",
                "trained": len(profiles),
                "skipped": len(skipped),
                "skipped_accounts": [
                    {"account_id": a, "messages": n} for a, n in sorted(skipped.items())
                ],
                "malformed_lines": stats.malformed,
                "duplicate_lines": stats.duplicates,
            },
        )
    for acct, n in sorted(skipped.items()):
        log.info("skipped %s: %d messages", acct, n)
    print(f"trained {len(profiles)} profiles, skipped {len(skipped)} accounts", file=sys.stderr)
    return EXIT_CLEAN


def cmd_score(args: argparse.Namespace) -> int:
    config = _config(args)
    provider = ProfileProvider(config, _store(args), _history(args))
    messages, stats = _read(args.messages, "messages")
    if stats.lines and not messages:
        raise InputError(f"{args.messages}: all {stats.lines} lines are malformed")
    per_account: dict[str, Counter] = {}
    with _output(args.out) as fh:
        for outcome in score_messages(messages, provider, config):
            _emit(fh, outcome.to_dict())
            c = per_account.setdefault(outcome.message.account_id, Counter())
            if outcome.score is None:
                c["unevaluable"] += 1
            else:
                c["scored"] += 1
                c["violations"] += outcome.score.violates_profile
    total = Counter()
    for acct in sorted(per_account):
        c = per_account[acct]
        total.update(c)
        print(_account_line(acct, c), file=sys.stderr)
    print(_account_line("all", total), file=sys.stderr)
    return EXIT_DETECTIONS if total["violations"] else EXIT_CLEAN


def _percent(part: int, whole: int) -> str:
    return f"{round(100 * part / whole)}%" if whole else "n/a"


def _account_line(acct: str, c: Counter) -> str:
    n = c["scored"] + c["unevaluable"]
    return (
        f"{acct}: violations {_percent(c['violations'], c['scored'])} "
        f"({c['violations']}/{c['scored']} scored), "
        f"unevaluable {_percent(c['unevaluable'], n)} ({c['unevaluable']}/{n})"
    )


def cmd_detect(args: argparse.Namespace) -> int:
    config = _config(args)
    store = _store(args)
    history = _history(args)
    messages, stats = _read(args.stream, "stream")
    if stats.lines and not messages:
        raise InputError(f"{args.stream}: all {stats.lines} lines are malformed")
    config.campaign.allowed_apps()  # fail early on an unreadable allow-list

    if store is not None:
        registry = ApplicationRegistry.load(
            Path(store.root) / REGISTRY_FILE,
            seed=config.seed,
            sample_size=config.campaign.sample_size,
        )
    else:
        registry = ApplicationRegistry(seed=config.seed, sample_size=config.campaign.sample_size)
    registry.observe_all(
        sorted(
            (m for acct in history.accounts() for m in history.stream(acct)),
            key=lambda m: (m.timestamp, m.message_id),
        )
    )
    provider = ProfileProvider(config, store, history)
    detector = Detector(config, provider, registry)
    with _output(args.out) as fh:
        for record in detector.run(messages):
            if record["record"] == "summary":
                record["malformed_lines"] = stats.malformed
                record["duplicate_lines"] = stats.duplicates
            _emit(fh, record)
    summary = detector.summary
    print(
        f"{summary.windows} windows, {summary.groups} groups, "
        f"{summary.groups_compromised} compromised, "
        f"{len(summary.accounts_flagged)} accounts flagged",
        file=sys.stderr,
    )
    return EXIT_DETECTIONS if summary.groups_compromised else EXIT_CLEAN


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.out is None:
        raise InputError("simulate needs --out DIR for its stream, history and truth files")
    try:
        spec = load_spec(args.spec)
    except OSError as exc:
        raise InputError(f"cannot read spec {args.spec}: {exc}") from None
    output = simulate(spec, args.seed)
    paths = write_outputs(output, args.out)
    info = describe(output)
    info.update({name: str(p) for name, p in paths.items()})
    print(json.dumps(info, ensure_ascii=False))
    return EXIT_CLEAN


def cmd_show_profile(args: argparse.Namespace) -> int:
    store = _store(args, required=True)
    profile = store.load(args.account_id)
    with _output(args.out) as fh:
        fh.write(json.dumps(profile.to_dict(), ensure_ascii=False, indent=2) + "\n")
    return EXIT_CLEAN


COMMANDS = {
    "train": cmd_train,
    "score": cmd_score,
    "detect": cmd_detect,
    "simulate": cmd_simulate,
    "show-profile": cmd_show_profile,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (InputError, ConfigError, SimulationSpecError, ProfileNotFound, CorruptProfile) as exc:
        print(f"profilewatch: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
