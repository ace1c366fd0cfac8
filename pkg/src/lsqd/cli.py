"""Batch runner for (P, splits) sweeps.

Writes ``results.csv`` (one row per case), ``timings.csv`` (per-phase wall
time), ``solves.log`` (one CSV line per linear solve) and ``summary.json``
(per-P fitted convergence order) into the output directory.

Config files are flat JSON, e.g.::

    {"preset": "mixed/octofoil/adaptive", "P": [2, 3], "splits": [0, 1, 2],
     "seed": 7, "out": "runs/mixed", "dump": ["solution"],
     "solver": {"rel_tol": 1e-12, "preconditioner": "incomplete_cholesky"}}

Instead of ``preset`` an explicit block may be given::

    {"domain": "octofoil", "grid": {"mode": "random", "base_depth": 4},
     "problem": {"exact": "exp_xy", "a": 1.0, "mu": 1.0, "bc": "robin"}}
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import threading
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, assembly, neighborhood
from .grid import GridConfig
from .pipeline import run_case
from .problems import Preset, exp_xy, make_domain, manufacture, polynomial, preset, sincos7_1d
from .solver import SolveOptions

log = logging.getLogger("lsqd")

RESULT_COLUMNS = [
    "run_id", "preset", "P", "splits", "N", "M", "eta_min", "epsilon", "iterations",
    "residual_inf", "linf_error", "estimator_global", "eoc_running", "wall_time_s",
]
TIMING_COLUMNS = ["run_id", "P", "splits", "grid", "neighborhoods", "assembly", "solve", "analysis"]
DUMP_KINDS = ("solution", "estimator", "grid", "system")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str | None = None
    explicit: dict | None = None
    P_list: list = field(default_factory=list)
    splits_list: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    out: str = "lsqd_out"
    dump: tuple = ()
    seed: int = 7
    threads: int = 1
    kappa_max: float = assembly.KAPPA_MAX

    @property
    def label(self) -> str:
        return self.preset or "custom"


def resolve(cfg: RunConfig) -> Preset:
    """Build the run inputs named by the config; raises ConfigError."""
    try:
        if cfg.preset:
            return preset(cfg.preset, seed=cfg.seed)
        if not cfg.explicit:
            raise ConfigError("config needs a preset or an explicit domain/grid/problem block")
        e = cfg.explicit
        dom = make_domain(e["domain"])
        gkw = dict(e.get("grid", {}))
        gkw.setdefault("random_seed", cfg.seed)
        grid = GridConfig(**gkw)
        pb = e.get("problem", {})
        kind = pb.get("exact", "exp_xy")
        if kind == "exp_xy":
            exact = exp_xy()
        elif kind.startswith("polynomial"):
            exact = polynomial(int(pb.get("degree", 2)), seed=int(pb.get("seed", 0)))
        else:
            raise ConfigError(f"unknown exact solution {kind!r}")
        prob = manufacture(exact, float(pb.get("a", 1.0)), float(pb.get("mu", 1.0)), pb.get("bc", "dirichlet"))
        return Preset("custom", dom, grid, prob, bc=pb.get("bc", "dirichlet"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _case(cfg: RunConfig, P: int, splits: int):
    """Run one case and do its dumps; returns plain data so it can cross processes."""
    p = resolve(cfg)
    opts = SolveOptions(**{**p.solver, **cfg.solver})
    want = bool(cfg.dump)
    r = run_case(p.domain, p.grid, p.problem, P, splits, opts, cfg.kappa_max, one_d=p.one_d, keep=want)
    tag = f"P{P}_s{splits}"
    out = Path(cfg.out)
    if "solution" in cfg.dump:
        a = r.artifacts
        analysis.dump_solution_csv(out / f"solution_{tag}.csv", a["cloud"], a["report"].alpha, p.problem.exact, r.Q)
    if "estimator" in cfg.dump:
        analysis.dump_estimator_csv(out / f"estimator_{tag}.csv", r.artifacts["nodes"], r.artifacts["estimates"])
    if "grid" in cfg.dump:
        if r.artifacts["tree"] is not None:
            r.artifacts["tree"].dump_csv(out / f"grid_{tag}.csv")
        neighborhood.dump_csv(r.artifacts["hoods"], out / f"neighborhoods_{tag}.csv")
    if "system" in cfg.dump:
        r.artifacts["system"].dump(out / f"system_{tag}")
    r.artifacts = {}
    return dataclasses.asdict(r)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_sorted(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in sorted(rows, key=lambda r: (r["P"], r["splits"])):
            w.writerow([_fmt(row[c]) for c in columns])


def _eoc_running(rows, P, splits):
    pts = sorted((r["splits"], r["linf_error"]) for r in rows if r["P"] == P and r["splits"] <= splits)
    if len(pts) < 2 or any(not e > 0 for _, e in pts):
        return float("nan")
    return analysis.fit_eoc([2.0 ** -s for s, _ in pts], [e for _, e in pts])


def run(cfg: RunConfig) -> int:
    """Execute the sweep; exit code 0 ok, 1 configuration error, 2 non-converged case."""
    try:
        p = resolve(cfg)
        SolveOptions(**{**p.solver, **cfg.solver})
        if not cfg.P_list:
            cfg.P_list = list(p.P_range)
        if not cfg.splits_list:
            cfg.splits_list = list(p.splits_range)
        bad = set(cfg.dump) - set(DUMP_KINDS)
        if bad:
            raise ConfigError(f"unknown dump kinds {sorted(bad)}")
        if min(cfg.P_list) < 1 or min(cfg.splits_list) < 0:
            raise ConfigError("P must be >= 1 and splits >= 0")
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
    except (ConfigError, TypeError, ValueError, OSError) as exc:
        log.error("configuration error: %s", exc)
        return 1

    cases = [(P, s) for P in cfg.P_list for s in cfg.splits_list]
    results, timings = [], []
    lock = threading.Lock()
    partial = open(out / "results.csv", "w", newline="")
    pw = csv.writer(partial)
    pw.writerow(RESULT_COLUMNS)
    solves = open(out / "solves.log", "a")
    failed = 0

    def record(case):
        nonlocal failed
        with lock:
            run_id = f"{cfg.label}:P{case['P']}:s{case['splits']}"
            row = dict(
                run_id=run_id, preset=cfg.label, P=case["P"], splits=case["splits"], N=case["N"], M=case["M"],
                eta_min=case["eta_min"], epsilon=case["epsilon"], iterations=case["iterations"],
                residual_inf=case["residual_inf"], linf_error=case["linf_error"],
                estimator_global=case["estimator_global"], eoc_running=float("nan"),
                wall_time_s=sum(case["timings"].values()),
            )
            results.append(row)
            timings.append(dict(run_id=run_id, P=case["P"], splits=case["splits"], **case["timings"]))
            pw.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
            partial.flush()
            solves.write(f"{case['N']},{case['Q']},{case['M']},{case['epsilon']:.6e},{case['iterations']},"
                         f"{case['residual_inf']:.6e},{case['timings']['solve']:.6f}\n")
            solves.flush()
            if not case["converged"]:
                failed += 1
                log.warning("case P=%d splits=%d did not converge", case["P"], case["splits"])

    try:
        if cfg.threads > 1:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                futs = [pool.submit(_case, cfg, P, s) for P, s in cases]
                for fut in as_completed(futs):
                    record(fut.result())
        else:
            for P, s in cases:
                record(_case(cfg, P, s))
    finally:
        partial.close()
        solves.close()

    for row in results:
        row["eoc_running"] = _eoc_running(results, row["P"], row["splits"])
    _write_sorted(out / "results.csv", RESULT_COLUMNS, results)
    _write_sorted(out / "timings.csv", TIMING_COLUMNS, timings)
    summary = {"preset": cfg.label, "P": {}, "cases": len(results), "not_converged": failed}
    for P in sorted(set(cfg.P_list)):
        rows = sorted((r for r in results if r["P"] == P), key=lambda r: r["splits"])
        errs = [r["linf_error"] for r in rows]
        hs = [2.0 ** -r["splits"] for r in rows]
        ests = [r["estimator_global"] for r in rows]
        entry = {"splits": [r["splits"] for r in rows], "linf_error": errs, "estimator_global": ests}
        if len(rows) >= 2 and all(e > 0 for e in errs):
            entry["eoc"] = analysis.fit_eoc(hs, errs)
        if len(rows) >= 2 and all(e > 0 for e in ests):
            entry["estimator_eoc"] = analysis.fit_eoc(hs, ests)
        summary["P"][str(P)] = entry
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=lambda v: None if isinstance(v, float) and math.isnan(v) else v)
    return 2 if failed else 0


def _int_list(text):
    try:
        out = []
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}")


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        explicit = {k: data[k] for k in ("domain", "grid", "problem") if k in data}
        cfg = RunConfig(
            preset=data.get("preset"),
            explicit=explicit or None,
            P_list=list(data.get("P", [])),
            splits_list=list(data.get("splits", [])),
            solver=dict(data.get("solver", {})),
            out=data.get("out", cfg.out),
            dump=tuple(data.get("dump", ())),
            seed=int(data.get("seed", cfg.seed)),
            threads=int(data.get("threads", 1)),
            kappa_max=float(data.get("kappa_max", cfg.kappa_max)),
        )
    if args.preset:
        cfg.preset = args.preset
    if args.out:
        cfg.out = args.out
    if args.p:
        cfg.P_list = args.p
    if args.splits:
        cfg.splits_list = args.splits
    if args.seed is not None:
        cfg.seed = args.seed
    if args.dump:
        cfg.dump = tuple(args.dump)
    if args.threads:
        cfg.threads = args.threads
    return cfg


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lsqd", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--preset", help="preset name, e.g. dirichlet/octofoil/adaptive or demo1d")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--p", type=_int_list, help="polynomial orders, e.g. 2,3 or 2..5")
    ap.add_argument("--splits", type=_int_list, help="split counts, e.g. 0..3")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--dump", action="append", choices=DUMP_KINDS)
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--list-presets", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.list_presets:
        from .problems import preset_names

        print("\n".join(preset_names()))
        return 0
    try:
        cfg = load_config(args)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
