"""Acceptance suite: one test (or parametrized family) per criterion.

Each check prints a ``[criterion k] PASS/FAIL`` line, collected again in the
terminal summary. Criterion 2 is the expensive h-P sweep and carries the
``slow`` marker; deselect with ``-m "not slow"``.
"""
import csv
import math

import numpy as np
import pytest

from lsqd.assembly import min_perturbation
from lsqd.cli import RunConfig, run
from lsqd.geometry import octofoil_domain, square_domain
from lsqd.pipeline import run_case, run_preset_case
from lsqd.problems import grid_config, manufacture, polynomial, preset
from lsqd.solver import SolveOptions

EOC_MIN = {2: 1.4, 3: 1.6, 4: 2.7, 5: 3.0}
TABLE1 = [f"{bc}/{dom}/{grid}" for bc in ("dirichlet", "neumann", "mixed")
          for dom in ("square", "octofoil") for grid in ("uniform", "adaptive")]


def _floats(rows, key):
    return [float(r[key]) for r in rows]


# 1. polynomial exactness
@pytest.mark.parametrize("bc", ["dirichlet", "robin"])
@pytest.mark.parametrize("mode", ["uniform", "random"])
@pytest.mark.parametrize("domain", ["square", "octofoil"])
@pytest.mark.parametrize("P", [2, 3, 4, 5])
def test_c1_polynomial_exactness(P, domain, mode, bc, acceptance):
    dom = square_domain() if domain == "square" else octofoil_domain()
    prob = manufacture(polynomial(P, seed=P), 1.0, 1.0, bc)
    res = run_case(dom, grid_config(mode, seed=7), prob, P, 0, SolveOptions())
    ok = res.linf_error < 1e-7
    acceptance(1, ok, f"P={P} {domain}/{mode}/{bc}: Linf={res.linf_error:.2e} (< 1e-7), N={res.N}")
    assert ok


# 2. h-P convergence orders
@pytest.mark.slow
@pytest.mark.parametrize("name", TABLE1)
def test_c2_eoc_thresholds(name, sweep, acceptance):
    s = sweep(name)
    bad = []
    for P, need in EOC_MIN.items():
        eoc = s["summary"]["P"][str(P)].get("eoc", float("nan"))
        ok = eoc >= need
        acceptance(2, ok, f"{name} P={P}: EOC={eoc:.2f} (>= {need})")
        if not ok:
            bad.append(P)
    assert s["code"] == 0, "a case did not converge"
    assert not bad, f"EOC below threshold for P in {bad}"


# 3. degenerate cases
@pytest.mark.parametrize("name", ["degenerate/robin", "degenerate/helmholtz"])
@pytest.mark.parametrize("P", [3, 5])
def test_c3_degenerate(name, P, sweep, acceptance):
    s = sweep(name, P=(P,))
    errs = _floats(s["rows"], "linf_error")
    eps = _floats(s["rows"], "epsilon")
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    finite = all(math.isfinite(e) for e in errs + eps)
    ok = s["code"] == 0 and decreasing and finite
    acceptance(3, ok, f"{name} P={P}: converged={s['code'] == 0} Linf over splits 0..3 = "
                      + ", ".join(f"{e:.2e}" for e in errs))
    assert ok


# 4. Neumann sensitivity to a/mu
def test_c4_neumann_ratio(acceptance):
    err = {}
    for k in (1, 1000):
        r = run_preset_case(preset(f"neumann/octofoil/uniform/ratio{k}"), 4, 2)
        assert r.converged
        err[k] = r.linf_error
    gain = err[1] / err[1000]
    ok = gain >= 10.0
    acceptance(4, ok, f"Linf a/mu=1: {err[1]:.2e}, a/mu=1000: {err[1000]:.2e}, ratio {gain:.1f} (>= 10)")
    assert ok


# 5. 1D demo
def test_c5_demo1d(sweep, acceptance):
    s = sweep("demo1d", P=(2, 3, 4), splits=tuple(range(6)))
    assert s["code"] == 0
    ok = True
    for P in (2, 3, 4):
        errs = [float(r["linf_error"]) for r in s["rows"] if int(r["P"]) == P]
        start = next((k for k, e in enumerate(errs) if e < 1e-1), len(errs))
        tail = errs[start:]
        mono = all(b < a for a, b in zip(tail, tail[1:]))
        acceptance(5, mono, f"demo1d P={P}: strictly decreasing once < 1e-1: "
                            + ", ".join(f"{e:.2e}" for e in errs))
        ok &= mono
    last = {int(r["P"]): float(r["linf_error"]) for r in s["rows"] if int(r["splits"]) == 5}
    orders = math.log10(last[2] / last[4])
    gap = orders >= 2.0
    acceptance(5, gap, f"demo1d split 5: P=2 {last[2]:.2e} vs P=4 {last[4]:.2e}, {orders:.2f} orders (>= 2)")
    assert ok and gap


# 6. stabilization shift
def test_c6_stabilization_formula(acceptance):
    eps = min_perturbation(100.0, 0.0, 1e40)
    ok = abs(eps - 1e-38) <= 0.01e-38
    acceptance(6, ok, f"epsilon(100, 0, 1e40) = {eps:.4e} (1e-38 within 1%)")
    assert ok


@pytest.mark.slow
def test_c6_pipeline_epsilon(sweep, acceptance):
    eps = []
    for name in ("dirichlet/square/uniform", "dirichlet/octofoil/adaptive"):
        eps += _floats(sweep(name)["rows"], "epsilon")
    ok = max(eps) <= 1e-30
    acceptance(6, ok, f"pipeline epsilon max over {len(eps)} cases = {max(eps):.2e} (<= 1e-30)")
    assert ok


# 7. estimator usefulness
@pytest.mark.slow
@pytest.mark.parametrize("P", [2, 3, 4, 5])
def test_c7_estimator(P, sweep, acceptance):
    s = sweep("dirichlet/octofoil/adaptive")
    rows = [r for r in s["rows"] if int(r["P"]) == P]
    err = np.log(_floats(rows, "linf_error"))
    est = np.log(_floats(rows, "estimator_global"))
    corr = float(np.corrcoef(err, est)[0, 1])
    entry = s["summary"]["P"][str(P)]
    diff = abs(entry["estimator_eoc"] - entry["eoc"])
    ok = corr >= 0.9 and diff <= 1.0
    acceptance(7, ok, f"P={P}: log-log corr={corr:.3f} (>= 0.9), EOC true={entry['eoc']:.2f} "
                      f"estimator={entry['estimator_eoc']:.2f} |diff|={diff:.2f} (<= 1.0)")
    assert ok


# 8. determinism
@pytest.mark.parametrize("name", ["mixed/octofoil/adaptive", "demo1d"])
def test_c8_determinism(name, tmp_path, acceptance):
    def once(tag):
        out = tmp_path / tag
        assert run(RunConfig(preset=name, P_list=[2, 3], splits_list=[0, 1], out=str(out), seed=7)) == 0
        with open(out / "results.csv") as fh:
            return [{k: v for k, v in r.items() if k != "wall_time_s"} for r in csv.DictReader(fh)]

    ok = once("a") == once("b")
    acceptance(8, ok, f"{name}: identical results.csv modulo wall_time_s")
    assert ok
