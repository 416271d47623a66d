"""Command-line front end: ``fracdim run`` and ``fracdim plot-data``.

Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import yaml

from .errors import ConfigError, ParameterError
from .experiments import EXPERIMENTS, config_from_dict, emit_results, load_record, plot_data, render_results, run_experiment

log = logging.getLogger("fracdim")

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
_STATUS_CODE = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracdim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment described by a YAML/JSON config file")
    run.add_argument("config", help="path to the configuration file")
    run.add_argument("--experiment", choices=EXPERIMENTS)
    run.add_argument("--alpha", type=float)
    run.add_argument("--replicates", type=int)
    run.add_argument("--seed", type=int, dest="master_seed")
    run.add_argument("--out", dest="output")
    run.add_argument("--format", choices=("json", "csv"))

    plot = sub.add_parser("plot-data", help="write regression points and fitted lines of a JSON record as CSV")
    plot.add_argument("record")
    plot.add_argument("--out", required=True)
    return parser


def load_config(path: str, overrides: dict):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("", f"{path} must contain a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


def _run(args) -> int:
    overrides = {k: getattr(args, k) for k in ("experiment", "alpha", "replicates", "master_seed", "output", "format")}
    cfg = load_config(args.config, overrides)
    record = run_experiment(cfg)
    s = record.summary
    log.info("%s: mean slope %.4f (sd %.4f) vs %.4f -> %s", cfg.experiment, s["mean"], s["std"], record.theoretical, record.status)
    if cfg.output:
        emit_results(record, cfg.output, cfg.format)
    else:
        sys.stdout.write(render_results(record, cfg.format))
    return _STATUS_CODE[record.status]


def _plot(args) -> int:
    try:
        record = load_record(args.record)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError("", f"cannot load record {args.record}: {exc}") from None
    plot_data(record, args.out)
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            return _run(args)
        return _plot(args)
    except (ConfigError, ParameterError) as exc:
        print(f"fracdim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fracdim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
