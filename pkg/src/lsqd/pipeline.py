"""One solve end to end: grid, neighborhoods, assembly, solve, analysis."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis, assembly, neighborhood, solver
from .grid import build_1d_cloud, build_quadtree
from .problems import IntervalDomain, Preset

log = logging.getLogger(__name__)


@dataclass
class CaseResult:
    P: int
    splits: int
    N: int
    Q: int
    M: int
    eta_min: int
    epsilon: float
    iterations: int
    residual_inf: float
    converged: bool
    linf_error: float
    estimator_global: float
    under_resolved: int
    timings: dict = field(default_factory=dict)
    connected: bool = True
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def wall_time(self) -> float:
        return float(sum(self.timings.values()))


def run_case(
    domain,
    grid_cfg,
    problem,
    P: int,
    splits: int,
    opts: solver.SolveOptions = solver.SolveOptions(),
    kappa_max: float = assembly.KAPPA_MAX,
    one_d: dict | None = None,
    keep: bool = False,
) -> CaseResult:
    """Solve one ``(P, splits)`` case; ``keep`` retains the intermediate objects."""
    t = {}
    t0 = time.perf_counter()
    if isinstance(domain, IntervalDomain):
        one_d = one_d or {}
        cloud = build_1d_cloud(one_d.get("n0", 10), one_d.get("seed", 7), splits, (domain.lo, domain.hi))
        tree, dom, d = None, None, 1
    else:
        tree, cloud = build_quadtree(domain, dataclasses.replace(grid_cfg, splits=splits))
        dom, d = domain, 2
    t["grid"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    hoods = neighborhood.build_all(cloud, P, tree, dom)
    connected = neighborhood.connectivity_check(hoods, cloud.N)
    if not connected:
        log.warning("neighbor graph is disconnected (N=%d, P=%d)", cloud.N, P)
    bases = assembly.make_bases(cloud, hoods, P)
    t["neighborhoods"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    raw = assembly.assemble(cloud, hoods, bases, dom, problem)
    rect = assembly.rescale_rows(raw)
    ns = assembly.form_normal(rect, kappa_max)
    t["assembly"] = time.perf_counter() - t0

    rep = solver.solve(ns, opts)
    t["solve"] = rep.wall_time

    t0 = time.perf_counter()
    Q = rect.Q
    if problem.exact is not None:
        linf = float(np.max(analysis.local_errors(rep.alpha, cloud, problem.exact, Q)))
    else:
        linf = float("nan")
    if d == 1:
        nodes, est = analysis.error_estimate_1d(cloud, rep.alpha, bases)
    else:
        nodes, est = analysis.error_estimate(cloud, tree, rep.alpha, bases, dom)
    est_global = float(np.max(est)) if len(est) else float("nan")
    t["analysis"] = time.perf_counter() - t0

    log.info(
        "P=%d splits=%d N=%d Q=%d M=%d eps=%.3e it=%d res=%.3e linf=%.3e",
        P, splits, cloud.N, Q, rect.M, ns.epsilon, rep.iterations, rep.final_residual_inf, linf,
    )
    res = CaseResult(
        P=P,
        splits=splits,
        N=cloud.N,
        Q=Q,
        M=rect.M,
        eta_min=neighborhood.min_neighbors(P, d),
        epsilon=ns.epsilon,
        iterations=rep.iterations,
        residual_inf=rep.final_residual_inf,
        converged=rep.converged,
        linf_error=linf,
        estimator_global=est_global,
        under_resolved=rect.under_resolved,
        timings=t,
        connected=connected,
    )
    if keep:
        res.artifacts = dict(
            cloud=cloud, tree=tree, hoods=hoods, bases=bases, system=rect, normal=ns,
            report=rep, nodes=nodes, estimates=est,
        )
    return res


def run_preset_case(p: Preset, P: int, splits: int, opts=None, keep=False) -> CaseResult:
    """Run one case of a preset; ``opts`` defaults to the preset's solver settings."""
    if opts is None:
        opts = solver.SolveOptions(**p.solver)
    return run_case(p.domain, p.grid, p.problem, P, splits, opts, one_d=p.one_d, keep=keep)
