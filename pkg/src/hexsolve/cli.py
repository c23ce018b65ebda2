"""Command-line front end; a thin client of the solve service.

Subcommands: solve a program file, generate benchmark instances, or run
the HTTP service. Exit codes: 0 with answer sets, 10 without, 1 on
input errors, 2 on external-source errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .client import ServiceClient, ServiceError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PLUGIN = 2
EXIT_NO_ANSWER = 10

STATS_KEYS = (
    "candidates",
    "rejected",
    "external_calls",
    "ebl_nogoods",
    "conflicts",
    "decisions",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


def _enum_value(text: str):
    if text in ("all", "first"):
        return text
    try:
        bound = int(text)
    except ValueError:
        raise _UsageError(f"--enum expects all, first or a positive integer, got {text!r}")
    if bound < 1:
        raise _UsageError("--enum bound must be at least 1")
    return bound


def build_parser() -> _Parser:
    parser = _Parser(prog="hexsolve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve_p = sub.add_parser("solve", help="solve a program file")
    solve_p.add_argument("file", help="program file in the surface language")
    solve_p.add_argument(
        "--ebl", choices=("off", "general", "informed", "user"), default="informed"
    )
    solve_p.add_argument("--enum", type=_enum_value, default="all")
    solve_p.add_argument("--heuristic", choices=("lex", "activity"), default="lex")
    solve_p.add_argument("--seed", type=int, default=0)
    solve_p.add_argument(
        "--propagation", choices=("watched", "counters"), default="watched"
    )
    solve_p.add_argument("--stats", action="store_true", help="print counters to stderr")
    solve_p.add_argument("--server", help="base URL of a running service (default: in-process)")

    gen_p = sub.add_parser("gen", help="generate benchmark program text")
    gen_sub = gen_p.add_subparsers(dest="generator", required=True)
    part_p = gen_sub.add_parser("partition", help="set-partitioning instance")
    part_p.add_argument("n", type=int)
    part_p.add_argument("--server")
    sudoku_p = gen_sub.add_parser("sudoku", help="Sudoku instance from a grid file")
    sudoku_p.add_argument("file")
    sudoku_p.add_argument("--server")

    serve_p = sub.add_parser("serve", help="run the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    return parser


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}")


def _run_solve(args) -> int:
    program = _read_file(args.file)
    with ServiceClient(args.server) as client:
        result = client.solve(
            program,
            ebl=args.ebl,
            enum=args.enum,
            heuristic=args.heuristic,
            seed=args.seed,
            propagation=args.propagation,
        )
    for answer_set in result["answer_sets"]:
        print("{" + ", ".join(answer_set) + "}")
    if args.stats:
        for key in STATS_KEYS:
            print(f"{key}={result['stats'][key]}", file=sys.stderr)
    return EXIT_OK if result["answer_sets"] else EXIT_NO_ANSWER


def _run_gen(args) -> int:
    with ServiceClient(args.server) as client:
        if args.generator == "partition":
            text = client.generate_partition(args.n)
        else:
            text = client.generate_sudoku(_read_file(args.file))
    sys.stdout.write(text)
    return EXIT_OK


def _run_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "solve":
            return _run_solve(args)
        if args.command == "gen":
            return _run_gen(args)
        return _run_serve(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLUGIN if exc.kind == "plugin" else EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
