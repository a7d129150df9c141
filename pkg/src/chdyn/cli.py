"""Command line entry point.

Subcommands mirror the three experiments; each reads a config file,
applies the command-line overrides, and writes CSV (plus VTK snapshots
for simulations) into the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, io


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the config file")
    sub.add_argument("--out", default=None, help="output directory override")
    sub.add_argument("--q", type=int, default=None, choices=range(1, 6),
                     help="BDF order override")
    sub.add_argument("--seed", type=int, default=None,
                     help="seed override for random initial data")


def _load(args) -> harness.RunConfig:
    config = harness.load_config(args.config)
    if args.out is not None:
        config.out_dir = Path(args.out)
    if args.q is not None:
        config.q = args.q
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chdyn",
        description="Cahn-Hilliard solver with dynamic boundary conditions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("converge-space", "converge-time", "simulate"):
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)

    try:
        config = _load(args)
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "converge-space":
            records = harness.converge_space(config)
            path = out_dir / "convergence_space.csv"
            io.write_convergence_csv(records, path)
            _print_records(records)
            print(f"wrote {path}")
        elif args.command == "converge-time":
            records = harness.converge_time(config)
            path = out_dir / "convergence_time.csv"
            io.write_convergence_csv(records, path)
            _print_records(records)
            print(f"wrote {path}")
        else:
            result = harness.simulate(config)
            print(f"wrote {result.series_path}")
            for p in result.snapshot_paths:
                print(f"wrote {p}")
    except (harness.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _print_records(records) -> None:
    fmt = "{:>5} {:>10} {:>10} {:>7} {:>11} {:>11} {:>11} {:>11} {:>7} {:>7} {:>7} {:>7}"
    print(fmt.format(*io.CONVERGENCE_HEADER))
    for r in records:
        print(fmt.format(
            r.level, f"{r.h:.4e}", f"{r.tau:.4e}", r.dof,
            f"{r.err_u_l2:.4e}", f"{r.err_u_h1:.4e}",
            f"{r.err_w_l2:.4e}", f"{r.err_w_h1:.4e}",
            *(f"{v:.3f}" if v is not None else "-" for v in
              (r.eoc_u_l2, r.eoc_u_h1, r.eoc_w_l2, r.eoc_w_h1)),
        ))


if __name__ == "__main__":
    raise SystemExit(main())
