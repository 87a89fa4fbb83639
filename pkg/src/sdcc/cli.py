"""``sdcc`` command line: coverage, discretize and experiment subcommands.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Diagnostics go to stderr; results go to files or stdout.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import discretize
from .coverage import sdcc_datasets
from .dataset import Dataset, load_csv
from .errors import NumericError, SchemaMismatch, SdccError, UsageError
from .experiment import format_grid, read_config, run_experiment, summarize, write_report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _t_list(text):
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad t list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty t list")
    return values


def _load_discretizer(path):
    return discretize.Discretizer.from_json(Path(path).read_text(encoding="utf-8"))


def cmd_coverage(args):
    b = load_csv(args.set_b, args.label_col)
    a = load_csv(args.set_a, args.label_col)
    if b.schema.feature_names != a.schema.feature_names:
        raise SchemaMismatch("set A and set B have different feature columns")
    if args.discretizer:
        dz = _load_discretizer(args.discretizer)
    else:
        # one binning for both sets, fitted on their union
        union = Dataset(b.schema, np.vstack([b.rows, a.rows]), b.labels + a.labels)
        dz = discretize.fit(union, args.bins, args.seed)
    db, da = discretize.apply(dz, b), discretize.apply(dz, a)
    for t in args.t:
        print(sdcc_datasets(db, da, t))
    return 0


def cmd_discretize(args):
    ds = load_csv(args.input, args.label_col)
    if args.discretizer:
        dz = _load_discretizer(args.discretizer)
    else:
        dz = discretize.fit(ds, args.bins, args.seed)
    dd = discretize.apply(dz, ds)
    out = Path(args.out)
    with out.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(list(dd.factor_names) + [ds.schema.label_name]) + "\n")
        for row, label in zip(dd.rows, dd.labels):
            fh.write(",".join([str(int(v)) for v in row] + [label]) + "\n")
    if args.save_discretizer:
        Path(args.save_discretizer).write_text(dz.to_json() + "\n", encoding="utf-8")
    return 0


def cmd_experiment(args):
    cfg = read_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    report = run_experiment(cfg)
    write_report(report, args.out)
    grid, totals = summarize(report)
    print(format_grid(grid, totals, cfg.t_values))
    return 0


def build_parser():
    p = _Parser(prog="sdcc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("coverage", help="SDCC of set B against set A for each t")
    c.add_argument("--set-b", required=True, help="reference CSV (the D_B argument)")
    c.add_argument("--set-a", required=True, help="CSV whose combinations are removed")
    c.add_argument("--t", required=True, type=_t_list, help="t values, e.g. 2,3,4")
    c.add_argument("--label-col", required=True)
    c.add_argument("--bins", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--discretizer", help="saved discretizer JSON to reuse")
    c.set_defaults(func=cmd_coverage)

    d = sub.add_parser("discretize", help="bin a CSV with per-feature 1-D k-means")
    d.add_argument("--input", required=True)
    d.add_argument("--label-col", required=True)
    d.add_argument("--bins", type=int, default=5)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.add_argument("--save-discretizer")
    d.add_argument("--discretizer", help="apply a saved discretizer instead of fitting")
    d.set_defaults(func=cmd_discretize)

    e = sub.add_parser("experiment", help="run the full study from a config file")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int, help="override master_seed")
    e.add_argument("--jobs", type=int, help="worker processes (one dataset each)")
    e.set_defaults(func=cmd_experiment)
    return p


def exit_code(exc):
    """Exit code for an exception raised by a command."""
    if isinstance(exc, UsageError):
        return 1
    if isinstance(exc, NumericError):
        return 3
    return 2


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    # KeyError/ValueError cover malformed discretizer JSON
    except (SdccError, OSError, KeyError, ValueError) as exc:
        print(f"sdcc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
