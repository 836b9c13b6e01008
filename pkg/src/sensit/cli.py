"""Command-line runner for the configured experiments.

Subcommands map one-to-one onto the experiment selectors; ``validate`` just
parses and checks a config.  Errors are reported on stderr as a single JSON
object with a ``category`` field (``config``, ``compute`` or ``io``) and a
matching exit code (2, 3, 4).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, config_hash, parse_config
from .plotting import plot
from .runner import run, write_outputs

_SUBCOMMANDS = {
    "sweep": "sweep",
    "quench-decay": "quench_decay",
    "prep-scan": "preparation_scan",
    "scramble-scan": "scrambling_scan",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensit",
        description="Qubit-probe dephasing and time-reversal contrast experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*_SUBCOMMANDS, "validate"]:
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} from a JSON config")
        p.add_argument("--config", required=True, help="path to the JSON config file")
        if name != "validate":
            p.add_argument("--out-dir", default="out", help="output directory (default: out)")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
            p.add_argument("--threads", type=int, default=1, help="worker threads (results identical for any count)")
            p.add_argument("--no-plot", action="store_true", help="skip the SVG rendering")
    return parser


def _fail(category: str, message: str, code: int) -> int:
    print(json.dumps({"category": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.command == "validate":
            print(f"ok {cfg.experiment} {config_hash(cfg)}")
            return 0
        expected = _SUBCOMMANDS[args.command]
        if cfg.experiment != expected:
            raise ConfigError(
                "experiment",
                f"config declares {cfg.experiment!r} but the {args.command} command expects {expected!r}",
            )
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        table = run(cfg, threads=max(1, args.threads))
        paths = write_outputs(table, args.out_dir)
        written = [str(paths["csv"]), str(paths["json"])]
        if not args.no_plot:
            svg = paths["csv"].with_suffix(".svg")
            plot(table, cfg.experiment, svg)
            written.append(str(svg))
        for p in written:
            print(p)
        return 0
    except ConfigError as exc:
        return _fail("config", str(exc), 2)
    except (ValueError, ArithmeticError) as exc:
        return _fail("compute", str(exc), 3)
    except OSError as exc:
        return _fail("io", str(exc), 4)


if __name__ == "__main__":
    sys.exit(main())
