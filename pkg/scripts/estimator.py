"""Compare the node-jump estimator with the true error on dirichlet/octofoil/adaptive.

Writes per-node estimator CSVs next to results.csv for plotting.
"""
import json
import sys

import numpy as np

from lsqd.cli import RunConfig, run

out = sys.argv[1] if len(sys.argv) > 1 else "runs/estimator"
run(RunConfig(preset="dirichlet/octofoil/adaptive", P_list=[2, 3, 4, 5], splits_list=[0, 1, 2, 3],
              out=out, dump=("estimator",)))
summary = json.load(open(f"{out}/summary.json"))
for P, e in summary["P"].items():
    corr = np.corrcoef(np.log(e["linf_error"]), np.log(e["estimator_global"]))[0, 1]
    print(f"P={P}  EOC true={e['eoc']:.2f}  estimator={e['estimator_eoc']:.2f}  log-log corr={corr:.3f}")
