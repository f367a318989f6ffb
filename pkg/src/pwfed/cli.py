"""Command-line entry point: ``pwfed {run,compare,analyze-variance,plot}``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from .config import load_spec
from .errors import ConfigError

log = logging.getLogger("pwfed")


def _batch_sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad batch size list {text!r}") from exc
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("batch sizes must be positive integers")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwfed", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_args(p):
        p.add_argument("--config", required=True, help="experiment spec (TOML, dotted keys)")
        p.add_argument("--seed", type=int, help="override federation.master_seed")
        p.add_argument("--aggregator", choices=["fedavg", "pw"])
        p.add_argument("--rounds", type=int)
        p.add_argument("--out", help="output directory (default: output.dir from the config)")
        p.add_argument("--workers", type=int, default=None, help="threads for client training")

    experiment_args(sub.add_parser("run", help="run one experiment, write rounds.csv and summary.json"))
    cmp = sub.add_parser("compare", help="both aggregators over a list of batch sizes")
    experiment_args(cmp)
    cmp.add_argument("--batch-sizes", type=_batch_sizes, help="comma-separated, e.g. 10,50")
    experiment_args(sub.add_parser("analyze-variance", help="starved-client scenario with variance tables"))

    plot = sub.add_parser("plot", help="SVG charts from one or more rounds.csv files")
    plot.add_argument("csv", nargs="+")
    plot.add_argument("--out", required=True)
    return parser


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    # imported lazily so `pwfed --help` stays fast
    from . import report, runner

    try:
        if args.command == "plot":
            for path in report.plot_rounds_csv(args.csv, args.out):
                print(path)
            return 0
        spec = load_spec(args.config).with_overrides(
            seed=args.seed, aggregator=args.aggregator, rounds=args.rounds, out=args.out
        )
    except (ConfigError, ValueError) as exc:
        print(f"pwfed: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pwfed: error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "run":
            outcome = runner.run_and_write(spec, workers=args.workers)
            s = outcome.summary
            print(f"final accuracy {s['final_accuracy']}, reliability {s['reliability_index']}")
        elif args.command == "compare":
            payload = runner.compare(spec, args.batch_sizes, workers=args.workers)
            for run in payload["runs"]:
                print(f"B={run['batch_size']:<4} {run['aggregator']:<6} "
                      f"mean acc {run['mean_accuracy']:.4f} xi {run['reliability_index']}")
        else:
            outcome = runner.analyze_variance(spec, workers=args.workers)
            print(f"variance tables written to {spec.output_dir}")
    except ConfigError as exc:
        print(f"pwfed: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 1
        log.debug("run failed", exc_info=True)
        print(f"pwfed: runtime failure: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
