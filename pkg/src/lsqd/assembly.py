"""Rectangular least-squares system: PDE, continuity and boundary rows."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

from .basis import LocalBasis, basis_size
from .geometry import LevelSetDomain, locate_boundary_point, outward_normal

log = logging.getLogger(__name__)

PDE, C0, C1X, C1Y, BC = range(5)
TAG_NAMES = ("PDE", "C0", "C1x", "C1y", "BC")
KAPPA_MAX = 1e40


class AssemblyError(ValueError):
    pass


def _as_field(v):
    if callable(v):
        return v
    return lambda x, _v=float(v): np.full(np.shape(x)[:-1], _v) if np.ndim(x) > 1 else _v


@dataclass
class ProblemSpec:
    """``a u - mu Lap(u) = f`` in the domain, ``beta u + gamma du/dn = g`` on its boundary.

    ``beta`` and ``gamma`` may be constants or callables of the boundary
    point; ``g`` is called as ``g(x, n)`` with the outward normal ``n``.
    """

    a: float
    mu: float
    f: Callable
    g: Callable
    beta: float | Callable = 1.0
    gamma: float | Callable = 0.0
    exact: Optional[object] = None

    def beta_at(self, x) -> float:
        return float(_as_field(self.beta)(x))

    def gamma_at(self, x) -> float:
        return float(_as_field(self.gamma)(x))


@dataclass
class RectangularSystem:
    A: sp.csr_matrix
    b: np.ndarray
    row_tags: np.ndarray
    row_i: np.ndarray
    row_j: np.ndarray
    Q: int
    N: int
    weights: Optional[np.ndarray] = None
    under_resolved: int = 0

    @property
    def M(self) -> int:
        return self.A.shape[0]

    def provenance(self, k: int) -> str:
        return f"{TAG_NAMES[self.row_tags[k]]}(i={self.row_i[k]}, j={self.row_j[k]})"

    def dump(self, prefix) -> None:
        scipy.io.mmwrite(f"{prefix}_A.mtx", self.A)
        np.savetxt(f"{prefix}_b.txt", self.b, fmt="%.17g")


@dataclass
class NormalSystem:
    G: sp.csr_matrix
    rhs: np.ndarray
    epsilon: float
    lambda_bounds: tuple = field(default=(np.nan, np.nan))


def make_bases(cloud, hoods, P: int) -> list[LocalBasis]:
    return [LocalBasis(cloud.points[h.owner], h.extent, P) for h in hoods]


def assemble(cloud, hoods, bases, dom: Optional[LevelSetDomain], prob: ProblemSpec) -> RectangularSystem:
    """Stack every row family into one sparse ``M x (Q N)`` system.

    Per neighborhood ``V_i``: a PDE row at each member (owner included), and
    for each other member ``j`` one value- and ``d`` derivative-continuity
    rows at ``x_j``. Each ghost contributes a boundary row at the interface
    point found on the segment from ``x_i`` to the ghost center (in 1D the
    ghost is the boundary site itself).
    """
    N = cloud.N
    if N == 0 or not hoods:
        raise AssemblyError("empty system")
    d = cloud.d
    P = bases[0].degree
    Q = basis_size(P, d)
    X = cloud.points[:N]
    f_at = np.asarray(prob.f(X), dtype=float).reshape(N)

    # own-center expansions: value is e_0, gradients touch only the linear terms
    own_grad = []
    for bj in bases:
        gj = bj.gradients(bj.center)[0]
        own_grad.append([(np.flatnonzero(gj[:, k]), gj[np.flatnonzero(gj[:, k]), k]) for k in range(d)])

    rows, cols, vals, rhs, tags, ri, rj = [], [], [], [], [], [], []
    nrow = 0
    qidx = np.arange(Q)
    n_under = 0

    def emit(block_cols, block_vals, b_val, tag, i, j):
        nonlocal nrow
        rows.append(np.full(len(block_cols), nrow, dtype=np.int64))
        cols.append(block_cols)
        vals.append(block_vals)
        rhs.append(b_val)
        tags.append(tag)
        ri.append(i)
        rj.append(j)
        nrow += 1

    for h, bi in zip(hoods, bases):
        i = h.owner
        n_under += h.under_resolved
        mem = h.members
        ev = bi.evaluate(X[mem], ("value", "grad", "laplacian"))
        val, grad, lap = ev["value"], ev["grad"], ev["laplacian"]
        pde = prob.a * val - prob.mu * lap
        ci = i * Q + qidx
        for m, j in enumerate(mem):
            emit(ci, pde[m], f_at[j], PDE, i, j)
        for m, j in enumerate(mem):
            if j == i:
                continue
            emit(np.append(ci, j * Q), np.append(val[m], -1.0), 0.0, C0, i, j)
            for k in range(d):
                qj, gv = own_grad[j][k]
                emit(np.concatenate([ci, j * Q + qj]), np.concatenate([grad[m, :, k], -gv]), 0.0, C1X + k, i, j)
        for g in h.ghosts:
            if d == 1:
                xb = np.asarray(g, dtype=float)
                n = np.sign(xb - bi.center)
            else:
                xb = locate_boundary_point(dom, bi.center, g)
                n = outward_normal(dom, xb)
            eb = bi.evaluate(xb, ("value", "grad"))
            beta, gamma = prob.beta_at(xb), prob.gamma_at(xb)
            row = beta * eb["value"][0] + gamma * (eb["grad"][0] @ n)
            emit(ci, row, float(prob.g(xb, n)), BC, i, -1)

    if n_under:
        log.warning("assembling with %d under-resolved neighborhoods", n_under)
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nrow, Q * N),
    )
    A.sum_duplicates()
    return RectangularSystem(
        A=A,
        b=np.array(rhs, dtype=float),
        row_tags=np.array(tags, dtype=np.int8),
        row_i=np.array(ri, dtype=np.int64),
        row_j=np.array(rj, dtype=np.int64),
        Q=Q,
        N=N,
        under_resolved=n_under,
    )


def rescale_rows(sys_: RectangularSystem) -> RectangularSystem:
    """Divide each row of ``[A | b]`` by the L1 norm of its ``A`` part."""
    A = sys_.A.tocsr()
    norms = np.asarray(abs(A).sum(axis=1)).ravel()
    bad = np.flatnonzero(norms == 0.0)
    if len(bad):
        raise AssemblyError(f"zero row {bad[0]}: {sys_.provenance(bad[0])}")
    w = 1.0 / norms
    return RectangularSystem(
        A=sp.diags(w) @ A,
        b=sys_.b * w,
        row_tags=sys_.row_tags,
        row_i=sys_.row_i,
        row_j=sys_.row_j,
        Q=sys_.Q,
        N=sys_.N,
        weights=w if sys_.weights is None else sys_.weights * w,
        under_resolved=sys_.under_resolved,
    )


def gershgorin_bounds(G) -> tuple[float, float]:
    """Gershgorin estimates ``(lambda_max, lambda_min)``, the lower one clipped at 0."""
    G = sp.csr_matrix(G)
    diag = G.diagonal()
    radius = np.asarray(abs(G).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.max(diag + radius)), max(0.0, float(np.min(diag - radius)))


def min_perturbation(lambda_max: float, lambda_min: float, kappa_max: float = KAPPA_MAX) -> float:
    """Smallest shift keeping ``(lmax + eps) / (lmin + eps)`` at ``kappa_max``, clamped at 0."""
    if kappa_max <= 1.0:
        raise ValueError("kappa_max must exceed 1")
    eps = (lambda_max - kappa_max * lambda_min) / (kappa_max - 1.0)
    return max(0.0, eps)


def stabilization_epsilon(G, kappa_max: float = KAPPA_MAX) -> float:
    return min_perturbation(*gershgorin_bounds(G), kappa_max)


def form_normal(sys_: RectangularSystem, kappa_max: float = KAPPA_MAX) -> NormalSystem:
    A = sys_.A.tocsr()
    AtA = (A.T @ A).tocsr()
    # mirror the upper triangle so G is symmetric bit for bit
    up = sp.triu(AtA, k=1)
    G = (up + up.T + sp.diags(AtA.diagonal())).tocsr()
    lmax, lmin = gershgorin_bounds(G)
    eps = min_perturbation(lmax, lmin, kappa_max)
    if eps > 0.0:
        G = (G + eps * sp.identity(G.shape[0], format="csr")).tocsr()
    G.sort_indices()
    return NormalSystem(G=G, rhs=A.T @ sys_.b, epsilon=eps, lambda_bounds=(lmax, lmin))
