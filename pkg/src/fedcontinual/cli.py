"""Command-line entry point: ``run``, ``sweep``, ``synth`` and ``report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .config import load_config
from .data.ingest import write_csv
from .data.synth import synth_generate
from .errors import ConfigError, DataError
from .harness import EXIT_CONFIG, EXIT_OK, SweepSpec, apply_env, emit_report, run_matrix, run_sweep


def _parse_values(text: str) -> list:
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(yaml.safe_load(item))
        except yaml.YAMLError:
            raise ConfigError(f"cannot parse sweep value {item!r}") from None
    if not values:
        raise ConfigError("--values needs at least one value")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedcontinual",
                                     description="Federated continual forecasting benchmark")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every run")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every method x target x seed in a config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")

    p = sub.add_parser("sweep", help="rerun a config once per value of one parameter")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--param", required=True,
                   help="dotted path, e.g. hyperparameters.replay_ratio (bare names are "
                        "looked up under hyperparameters)")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("synth", help="write the config's synthetic stations as CSV files")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("report", help="rebuild aggregate and summary files from run outputs")
    p.add_argument("--results", required=True, type=Path)
    p.add_argument("--scale", type=float, default=1000.0, help="multiplier for RMSE metrics")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = apply_env(load_config(args.config))
            code = run_matrix(cfg, args.out)
            print((args.out or Path(cfg.output_dir)) / "summary.txt")
            return code
        if args.command == "sweep":
            cfg = load_config(args.config)
            raw = yaml.safe_load(args.config.read_text(encoding="utf-8"))
            if cfg.data.csv_dir:
                raw.setdefault("data", {})["csv_dir"] = cfg.data.csv_dir
            spec = SweepSpec(args.param, _parse_values(args.values), raw)
            out = args.out or Path(apply_env(cfg).output_dir)
            code = run_sweep(spec, out)
            print(out / "sweep.csv")
            return code
        if args.command == "synth":
            cfg = load_config(args.config)
            args.out.mkdir(parents=True, exist_ok=True)
            for series in synth_generate(cfg.data.synthetic, cfg.data.synthetic_seed):
                path = args.out / f"{series.station_id}.csv"
                write_csv(series, path)
                print(path)
            return EXIT_OK
        if args.command == "report":
            info = emit_report(args.results, scale=args.scale)
            print(f"{info['completed']} runs; summary in {args.results / 'summary.txt'}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
