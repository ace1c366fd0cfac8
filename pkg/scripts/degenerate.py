"""Degenerate cases: Robin with gamma=-1 and Helmholtz with mu=-100, P=3 and P=5."""
import sys

from lsqd.problems import preset
from lsqd.pipeline import run_preset_case

splits = range(int(sys.argv[1]) + 1) if len(sys.argv) > 1 else range(4)
for name in ("degenerate/robin", "degenerate/helmholtz"):
    p = preset(name)
    for P in (3, 5):
        errs = []
        for s in splits:
            r = run_preset_case(p, P, s)
            errs.append(r.linf_error)
            print(f"{name:22s} P={P} splits={s} N={r.N:6d} iters={r.iterations:5d} "
                  f"converged={r.converged} linf={r.linf_error:.3e}", flush=True)
        print(f"{name} P={P} strictly decreasing: {all(b < a for a, b in zip(errs, errs[1:]))}")
