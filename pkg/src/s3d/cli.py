"""Command-line entry point: ``python -m s3d <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 io/parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import InvalidInputError, ParseError, PreconditionViolated
from .harness import load_config, run_gains, run_grow, run_toy_rbf, toy_config
from .io import dumps_json, write_text
from .verify import SUITES, passed, run_verify

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="s3d", description="Grow networks by signed neuron splitting.")
    sub = p.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("toy-rbf", help="grow an RBF network on the 1-d toy target")
    toy.add_argument("--config", required=True, help="flat JSON config ('{}' for defaults)")
    toy.add_argument("--seed", type=int, required=True)
    toy.add_argument("--out", required=True, help="output directory")
    toy.add_argument("--method", choices=["s2d", "s3d"])
    toy.add_argument("--m", type=int, choices=[2, 3, 4])
    toy.add_argument("--c", type=float)
    toy.add_argument("--rounds", type=int)

    g = sub.add_parser("grow", help="grow a saved model on a saved dataset")
    g.add_argument("--config", required=True, help="flat JSON config with 'model' and 'data' paths")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--m", type=int, choices=[2, 3, 4])
    g.add_argument("--c", type=float)
    g.add_argument("--rounds", type=int)

    gn = sub.add_parser("gains", help="report splitting gains of every neuron")
    gn.add_argument("--model", required=True)
    gn.add_argument("--data", required=True)
    gn.add_argument("--c", type=float, default=3.0)
    gn.add_argument("--out", help="write gains.json here instead of stdout")

    v = sub.add_parser("verify", help="run randomized verification suites")
    v.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", help="write verify.json here instead of stdout")
    return p


def _overrides(args, doc: dict, keys) -> dict:
    doc = dict(doc)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    return doc


def _emit(doc: dict, out, name: str):
    text = dumps_json(doc)
    if out:
        write_text(Path(out) / name, text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "toy-rbf":
            doc = _overrides(args, load_config(args.config), ["seed", "method", "m", "c", "rounds"])
            summary = run_toy_rbf(toy_config(doc), args.out)
            print(f"final loss {summary['final_loss']:.6g} with {summary['final_neuron_count']} neurons")
        elif args.command == "grow":
            doc = _overrides(args, load_config(args.config), ["seed", "m", "c", "rounds"])
            summary = run_grow(doc, args.out)
            print(f"final loss {summary['final_loss']:.6g} with {summary['final_neuron_count']} neurons")
        elif args.command == "gains":
            _emit(run_gains(args.model, args.data, args.c), args.out, "gains.json")
        else:
            report = run_verify(args.suite, args.trials, args.seed)
            _emit(report, args.out, "verify.json")
            return EXIT_OK if passed(report) else EXIT_VERIFY
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidInputError, PreconditionViolated, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
