"""1D sweep for u = sin(7x) + cos(7x) on [0, 1], P = 2, 3, 4 and splits 0..5."""
import csv
import sys

from lsqd.cli import RunConfig, run

out = sys.argv[1] if len(sys.argv) > 1 else "runs/demo1d"
run(RunConfig(preset="demo1d", out=out, dump=("solution",)))
with open(f"{out}/results.csv") as fh:
    for r in csv.DictReader(fh):
        print(f"P={r['P']} splits={r['splits']} N={r['N']:>4s} linf={float(r['linf_error']):.3e}")
