"""End-to-end run on the bundled datasets (Wine, Cancer, Balance).

Takes about twenty seconds. Writes records.csv, correlation.csv and
report.json to ``demo_out/`` and prints the Higher/Same/Lower grid.
"""
import sys

from sdcc.experiment import format_grid, read_config, run_experiment, summarize, write_report
from sdcc.dataset import BUILTIN_DIR

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
cfg = read_config(BUILTIN_DIR / "bundled.cfg")
print("datasets:", [m.name for m in cfg.datasets], "seed:", cfg.master_seed)

report = run_experiment(cfg)
write_report(report, out)

grid, totals = summarize(report)
print(format_grid(grid, totals, cfg.t_values))

for name, accs in report.accuracy.items():
    print(name, {k: round(v[0], 3) for k, v in accs.items()})
print("original-space r =", report.correlation.global_pearson.get("ORIGINAL"))
