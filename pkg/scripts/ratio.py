"""Neumann error on the octofoil as a/mu grows from 1 to 1000 (P=4, two splits)."""
import sys

from lsqd.problems import preset
from lsqd.pipeline import run_preset_case

P = int(sys.argv[1]) if len(sys.argv) > 1 else 4
splits = int(sys.argv[2]) if len(sys.argv) > 2 else 2
for k in (1, 10, 100, 1000):
    r = run_preset_case(preset(f"neumann/octofoil/uniform/ratio{k}"), P, splits)
    print(f"a/mu={k:5d}  linf={r.linf_error:.3e}  estimator={r.estimator_global:.3e}  iters={r.iterations}", flush=True)
