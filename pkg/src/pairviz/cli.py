"""Command line entry points: serve, gen-data, replay, diff-events."""
from __future__ import annotations

import argparse
import asyncio
import logging
import sys

from . import fixtures
from .harness import ReplayConfig, diff_event_logs, gen_flights, load_airports, replay


def _cmd_serve(args: argparse.Namespace) -> int:
    from .net import RelayServer

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    server = RelayServer(host=args.host, port=args.port)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_gen_data(args: argparse.Namespace) -> int:
    airports = load_airports(args.airports or fixtures.path("airports.json"))
    dataset = gen_flights(args.seed, args.flights, airports)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(dataset.to_json() + "\n")
    print(f"wrote {len(dataset.flights)} flights to {args.out}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    config = ReplayConfig(
        trace_a=args.trace_a,
        trace_b=args.trace_b,
        scenario=args.scenario,
        seed=args.seed,
        server_url=args.server,
        out_dir=args.out,
    )
    result = replay(config)
    print(f"events: {len(result.event_lines)}")
    print(f"origins: {sorted(result.origins)}  dests: {sorted(result.dests)}")
    print(f"flights: {len(result.flights)}")
    if not result.converged():
        print("replicas DIVERGED", file=sys.stderr)
        return 1
    print("replicas converged")
    return 0


def _cmd_diff_events(args: argparse.Namespace) -> int:
    diffs = diff_event_logs(args.log_a, args.log_b)
    if not diffs:
        print("logs identical")
        return 0
    for diff in diffs:
        print(diff)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairviz",
        description="Gesture-driven collaborative visualization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session relay server")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.set_defaults(func=_cmd_serve)

    gen = sub.add_parser("gen-data", help="generate a seeded flight dataset")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--flights", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--airports", help="airport table JSON (defaults to shipped fixture)")
    gen.set_defaults(func=_cmd_gen_data)

    rep = sub.add_parser("replay", help="replay two traces through the pipeline")
    rep.add_argument("--trace-a", required=True)
    rep.add_argument("--trace-b", required=True)
    rep.add_argument("--scenario", required=True)
    rep.add_argument("--seed", type=int, default=42)
    rep.add_argument("--server", help="relay url (ws://host:port); default in-process")
    rep.add_argument("--out", help="output directory for events and snapshots")
    rep.set_defaults(func=_cmd_replay)

    diff = sub.add_parser("diff-events", help="compare two event logs")
    diff.add_argument("log_a")
    diff.add_argument("log_b")
    diff.set_defaults(func=_cmd_diff_events)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
