"""Command line entry point: ``ccnsim run`` and ``ccnsim pktdump``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ccnsim.codec import DecodeError, dump
from ccnsim.harness import ConfigError, TopologyError, load_config, load_topology, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _read_packet(path: Path) -> bytes:
    raw = path.read_bytes()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        return raw
    cleaned = "".join(text.split())
    if cleaned.lower().startswith("0x"):
        cleaned = cleaned[2:]
    try:
        return bytes.fromhex(cleaned)
    except ValueError:
        return raw


def cmd_run(args: argparse.Namespace) -> int:
    try:
        topology = load_topology(args.topology)
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.reps is not None:
            config.repetitions = args.reps
        config.validate()
    except (OSError, TopologyError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run_experiment(topology, config, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "results.csv", deterministic=args.deterministic)
    with open(out / "runs.txt", "w") as fh:
        for rep in report.repetitions:
            if rep.report is None:
                fh.write(f"{rep.index} {rep.seed} failed {rep.error}\n")
            else:
                r = rep.report
                fh.write(f"{rep.index} {rep.seed} ok {r.events} {r.event_log_hash}\n")
    print(f"wrote {out / 'results.csv'} ({len(report.repetitions)} repetitions, "
          f"{len(report.failed)} failed)")
    if report.failed:
        for rep in report.failed:
            print(f"repetition {rep.index} aborted: {rep.error}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_pktdump(args: argparse.Namespace) -> int:
    try:
        data = _read_packet(Path(args.file))
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        print(dump(data))
    except DecodeError as exc:
        print(f"decode error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccnsim", description="CCNx discrete-event simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV results")
    run.add_argument("--topology", required=True)
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--deterministic", action="store_true",
                     help="omit the timestamp header so output is byte-identical across runs")
    run.set_defaults(func=cmd_run)

    pkt = sub.add_parser("pktdump", help="print a wire-format packet as a TLV tree")
    pkt.add_argument("file", help="binary packet or hex text")
    pkt.set_defaults(func=cmd_pktdump)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
