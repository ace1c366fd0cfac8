"""h-P convergence table: fitted EOC per (preset, P) over splits 0..3.

Usage: python scripts/run_convergence.py [--out runs/convergence] [--p 2,3,4,5] [--splits 0..3] [--only dirichlet]
"""
import argparse
import json
import time
from pathlib import Path

from lsqd.cli import RunConfig, run

FAMILIES = ("dirichlet", "neumann", "mixed")
DOMAINS = ("square", "octofoil")
GRIDS = ("uniform", "adaptive")
THRESHOLD = {2: 1.4, 3: 1.6, 4: 2.7, 5: 3.0}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/convergence")
    ap.add_argument("--p", default="2,3,4,5")
    ap.add_argument("--splits", default="0,1,2,3")
    ap.add_argument("--only", default=None, help="restrict to one BC family")
    args = ap.parse_args()
    Ps = [int(x) for x in args.p.split(",")]
    splits = [int(x) for x in args.splits.split(",")]
    table = {}
    for fam in FAMILIES:
        if args.only and fam != args.only:
            continue
        for dom in DOMAINS:
            for grid in GRIDS:
                name = f"{fam}/{dom}/{grid}"
                out = Path(args.out) / name.replace("/", "_")
                t0 = time.perf_counter()
                code = run(RunConfig(preset=name, P_list=Ps, splits_list=splits, out=str(out)))
                summary = json.loads((out / "summary.json").read_text())
                eocs = {int(P): v.get("eoc") for P, v in summary["P"].items()}
                table[name] = eocs
                cells = "  ".join(f"P{P}={e:5.2f}{'' if e >= THRESHOLD.get(P, 0) else '*'}" for P, e in eocs.items())
                print(f"{name:30s} {cells}  exit={code}  {time.perf_counter() - t0:7.1f}s", flush=True)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "convergence.json").write_text(json.dumps(table, indent=2))


if __name__ == "__main__":
    main()
