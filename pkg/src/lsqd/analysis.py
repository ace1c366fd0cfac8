"""Pointwise errors, convergence-order fits and the node-based error estimator."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .basis import monomials


@dataclass
class ErrorReport:
    local_abs: np.ndarray
    nodes: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    estimator_per_node: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def linf(self) -> float:
        return float(np.max(self.local_abs))

    @property
    def estimator_global(self) -> float:
        return float(np.max(self.estimator_per_node)) if len(self.estimator_per_node) else float("nan")


def _stack_bases(bases):
    centers = np.array([b.center for b in bases])
    inv_scales = 1.0 / np.array([b.scale for b in bases])
    return centers, inv_scales


def expansion_values(alpha, bases, pts, owners) -> np.ndarray:
    """``sum_q alpha_i^q phi_i^q(p)`` for each (point, owner) pair."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    owners = np.atleast_1d(np.asarray(owners, dtype=np.int64))
    centers, inv_scales = _stack_bases(bases)
    P = bases[0].degree
    xi = (pts - centers[owners]) * inv_scales[owners]
    phi = monomials(xi, inv_scales[owners], P)["value"]
    Q = phi.shape[1]
    coef = np.asarray(alpha).reshape(-1, Q)[owners]
    return np.einsum("nq,nq->n", phi, coef)


def evaluate_solution(alpha, bases, p, owner: int) -> float:
    return float(expansion_values(alpha, bases, np.atleast_2d(p), [owner])[0])


def local_errors(alpha, cloud, exact, Q: int) -> np.ndarray:
    """``|u(x_i) - u_i(x_i)|``; at its own center an expansion equals its constant coefficient."""
    N = cloud.N
    u_num = np.asarray(alpha).reshape(N, Q)[:, 0]
    return np.abs(exact.value(cloud.points[:N]) - u_num)


def estimator_nodes(tree):
    """Unique leaf corners strictly inside the domain."""
    D = tree.max_depth
    s = (1 << (D - tree.depths))[:, None]
    corners = []
    for a in (0, 1):
        for b in (0, 1):
            corners.append((tree.index + np.array([a, b])) * s)
    lattice = np.unique(np.vstack(corners), axis=0)
    xy = tree.origin + lattice * (tree.box_size / (1 << D))
    return xy[tree.domain.value(xy) < 0.0]


def error_estimate(cloud, tree, alpha, bases, dom=None):
    """Max disagreement between the expansions of the inside cells touching each node.

    Touching cells are found by probing the four diagonal quadrants around
    the node, which also handles hanging nodes on non-graded trees. Nodes
    touched by fewer than two inside cells are dropped. Returns
    ``(nodes, estimates)``.
    """
    nodes = estimator_nodes(tree)
    dlt = tree.probe_delta
    offs = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]]) * dlt
    owners = np.full((len(nodes), 4), -1, dtype=np.int64)
    for k, o in enumerate(offs):
        leaf = tree.locate(nodes + o)
        owners[leaf >= 0, k] = tree.point_of_leaf[leaf[leaf >= 0]]
    valid = owners >= 0
    s = np.sort(owners, axis=1)
    distinct = (s[:, 0] >= 0).astype(int) + np.sum((s[:, 1:] != s[:, :-1]) & (s[:, 1:] >= 0), axis=1)
    keep = distinct >= 2
    nodes, owners, valid = nodes[keep], owners[keep], valid[keep]
    n_idx, slot = np.nonzero(valid)
    vals = np.full(owners.shape, np.nan)
    vals[n_idx, slot] = expansion_values(alpha, bases, nodes[n_idx], owners[n_idx, slot])
    est = np.nanmax(vals, axis=1) - np.nanmin(vals, axis=1)
    return nodes, est


def error_estimate_1d(cloud, alpha, bases):
    """Jump between adjacent expansions at the midpoint between their centers."""
    N = cloud.N
    x = cloud.points[:N]
    mids = 0.5 * (x[:-1] + x[1:])
    left = expansion_values(alpha, bases, mids, np.arange(N - 1))
    right = expansion_values(alpha, bases, mids, np.arange(1, N))
    return mids, np.abs(left - right)


@dataclass
class ConvergenceSeries:
    splits: list = field(default_factory=list)
    h: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    estimator_global: list = field(default_factory=list)
    N: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)

    def add(self, splits, linf, estimator_global=float("nan"), N=0, wall_time=0.0):
        self.splits.append(splits)
        self.h.append(2.0 ** -splits)
        self.linf.append(linf)
        self.estimator_global.append(estimator_global)
        self.N.append(N)
        self.wall_time.append(wall_time)

    @property
    def eoc(self) -> float:
        return fit_eoc(self.h, self.linf)


def fit_eoc(h, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(e) < 2:
        raise ValueError("need at least two entries to fit a convergence order")
    if np.any(e <= 0.0) or np.any(h <= 0.0):
        raise ValueError("errors and h must be positive")
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return float(slope)


def dump_solution_csv(path, cloud, alpha, exact, Q: int) -> None:
    N = cloud.N
    pts = cloud.points[:N]
    u_num = np.asarray(alpha).reshape(N, Q)[:, 0]
    u_ex = exact.value(pts) if exact is not None else np.full(N, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u_num", "u_exact", "abs_err"])
        for k in range(N):
            y = pts[k, 1] if pts.shape[1] > 1 else 0.0
            w.writerow([repr(pts[k, 0]), repr(y), repr(u_num[k]), repr(u_ex[k]), repr(abs(u_ex[k] - u_num[k]))])


def dump_estimator_csv(path, nodes, est) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "est"])
        for p, e in zip(nodes, est):
            y = p[1] if len(p) > 1 else 0.0
            w.writerow([repr(p[0]), repr(y), repr(e)])
