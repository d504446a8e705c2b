"""Command-line front end.

Subcommands: fetch, stats, network, cascade, tail, report.  Exit codes:
0 success, 1 usage/config errors, 2 data errors, 3 I/O errors.  Flag values
override config-file values; the CASCADENET_SEED environment variable seeds a
run when neither a flag nor the file does.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .config import resolve_config
from .errors import EXIT_IO, EXIT_USAGE, CascadeNetError
from . import pipeline


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors exiting 1 instead of the default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_io_options(p: argparse.ArgumentParser):
    p.add_argument("--input", metavar="CSV", help="wide date,<TICKER>,... price CSV")
    p.add_argument("--config", metavar="JSON", help="flat JSON config file")
    p.add_argument("--output-dir", metavar="DIR", help="where report files go")
    p.add_argument(
        "--dump-config", metavar="PATH",
        help="write the fully resolved config JSON to PATH and exit",
    )


def _add_network_options(p: argparse.ArgumentParser):
    p.add_argument(
        "--theta", action="append", type=float, metavar="T",
        help="exposure threshold; repeat for several (default 0.3 and 0.5)",
    )
    p.add_argument(
        "--ref-price", choices=("mean", "first", "last"), dest="ref_price",
        help="reference price statistic over the aligned window (default mean)",
    )


def _add_cascade_options(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="master seed for the Monte Carlo runs")
    p.add_argument("--runs", type=int, metavar="N", help="Monte Carlo runs per cell")
    p.add_argument(
        "--scenario", choices=("general", "single", "simultaneous"),
        help="restrict to one scenario (default: the full grid)",
    )
    p.add_argument(
        "--target", action="append", metavar="TICKER",
        help="shock target; repeat for several (default: the first asset)",
    )
    p.add_argument(
        "--transpose-exposures", action="store_true",
        help="transmit losses along columns instead of rows",
    )
    p.add_argument(
        "--shock-all", action="store_true",
        help="the general scenario shocks every asset instead of one random one",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cascadenet",
        description=(
            "Correlation-based exposure networks, tail risk, and default-cascade "
            "simulation for daily equity prices."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fetch", help="download daily lows into a price CSV")
    p.add_argument("--ticker", action="append", required=True, metavar="TICKER")
    p.add_argument("--start", required=True, metavar="YYYY-MM-DD")
    p.add_argument("--end", required=True, metavar="YYYY-MM-DD")
    p.add_argument("--endpoint", required=True, metavar="URL")
    p.add_argument("--out", default="prices.csv", metavar="CSV")

    p = sub.add_parser("stats", help="descriptive return statistics")
    _add_io_options(p)

    p = sub.add_parser("network", help="correlation/exposure networks and risk table")
    _add_io_options(p)
    _add_network_options(p)

    p = sub.add_parser("cascade", help="Monte Carlo default cascades")
    _add_io_options(p)
    _add_network_options(p)
    _add_cascade_options(p)

    p = sub.add_parser("tail", help="loss-tail classification (Hill, CCDF)")
    _add_io_options(p)

    p = sub.add_parser("report", help="everything above into one output tree")
    _add_io_options(p)
    _add_network_options(p)
    _add_cascade_options(p)
    p.add_argument(
        "--no-figures", action="store_true",
        help="skip PNG rendering; write only the delimited outputs",
    )
    return parser


def _resolved_config(args):
    overrides = {
        "input_csv": getattr(args, "input", None),
        "output_dir": getattr(args, "output_dir", None),
        "theta_list": getattr(args, "theta", None),
        "seed": getattr(args, "seed", None),
        "n_runs": getattr(args, "runs", None),
        "reference_price_mode": getattr(args, "ref_price", None),
    }
    return resolve_config(getattr(args, "config", None), overrides)


def _dispatch(args) -> int:
    if args.command == "fetch":
        pipeline.cmd_fetch(args.ticker, args.start, args.end, args.endpoint, args.out)
        return 0

    cfg = _resolved_config(args)
    if args.dump_config:
        cfg.dump(args.dump_config)
        return 0

    if args.command == "stats":
        pipeline.cmd_stats(cfg)
    elif args.command == "network":
        pipeline.cmd_network(cfg)
    elif args.command == "cascade":
        pipeline.cmd_cascade(
            cfg,
            scenario_choice=args.scenario,
            targets=tuple(args.target or ()),
            shock_all=args.shock_all,
            transpose=args.transpose_exposures,
        )
    elif args.command == "tail":
        pipeline.cmd_tail(cfg)
    elif args.command == "report":
        pipeline.cmd_report(
            cfg,
            scenario_choice=args.scenario,
            targets=tuple(args.target or ()),
            shock_all=args.shock_all,
            transpose=args.transpose_exposures,
            figures=not args.no_figures,
        )
    else:  # pragma: no cover - argparse enforces the choices
        raise AssertionError(args.command)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except CascadeNetError as exc:
        print(f"cascadenet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"cascadenet: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
