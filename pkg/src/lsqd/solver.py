"""Preconditioned conjugate gradient on the stabilized normal equations."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp

from .assembly import NormalSystem, gershgorin_bounds

log = logging.getLogger(__name__)

# relative diagonal shifts tried in turn when IC(0) breaks down
SHIFT_SCHEDULE = (0.0, 1e-6, 1e-4, 1e-3, 1e-2, 3e-2, 0.1, 0.3)
MAX_RESTARTS = 10


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    abs_tol: float = 1e-26
    rel_tol: float = 1e-12
    max_iters: int = 100_000
    preconditioner: str = "incomplete_cholesky"

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.preconditioner not in ("incomplete_cholesky", "jacobi", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass(frozen=True)
class SolveReport:
    alpha: np.ndarray
    iterations: int
    final_residual_inf: float
    epsilon_used: float
    wall_time: float
    converged: bool
    preconditioner: str = "none"
    energy_history: tuple = field(default=(), repr=False)

    def log_line(self, N: int, Q: int, M: int) -> str:
        return (
            f"{N},{Q},{M},{self.epsilon_used:.6e},{self.iterations},"
            f"{self.final_residual_inf:.6e},{self.wall_time:.6f}"
        )


@numba.njit(cache=True)
def _ic0(indptr, indices, data):
    """Zero-fill incomplete Cholesky of a CSR lower triangle with sorted columns.

    Returns (values, ok); values share the sparsity pattern of the input.
    """
    n = len(indptr) - 1
    L = data.copy()
    diag_pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        start, end = indptr[i], indptr[i + 1]
        for p in range(start, end):
            k = indices[p]
            # s = sum_{m<k} L[i,m] L[k,m] by merging the two sorted rows
            s = 0.0
            a, b = start, indptr[k]
            bend = diag_pos[k] if k < i else indptr[k + 1]
            while a < p and b < bend:
                ca, cb = indices[a], indices[b]
                if ca == cb:
                    s += L[a] * L[b]
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            if k < i:
                L[p] = (L[p] - s) / L[diag_pos[k]]
            else:
                v = L[p] - s
                if not v > 0.0:
                    return L, False
                L[p] = np.sqrt(v)
                diag_pos[i] = p
    return L, True


@numba.njit(cache=True)
def _ic_apply(indptr, indices, L, r):
    n = len(indptr) - 1
    y = r.copy()
    for i in range(n):
        s = y[i]
        end = indptr[i + 1] - 1
        for p in range(indptr[i], end):
            s -= L[p] * y[indices[p]]
        y[i] = s / L[end]
    for i in range(n - 1, -1, -1):
        end = indptr[i + 1] - 1
        y[i] /= L[end]
        yi = y[i]
        for p in range(indptr[i], end):
            y[indices[p]] -= L[p] * yi
    return y


class IncompleteCholesky:
    """IC(0) factor ``L L^T ~ G + shift diag(G)``."""

    def __init__(self, G, shift: float = 0.0):
        low = sp.tril(G, format="csr")
        if shift:
            low = (low + sp.diags(shift * G.diagonal())).tocsr()
        low.sort_indices()
        self.indptr = low.indptr.astype(np.int64)
        self.indices = low.indices.astype(np.int64)
        diag_last = np.all(self.indices[self.indptr[1:] - 1] == np.arange(G.shape[0]))
        if not diag_last:
            raise SolverError("matrix has a structurally zero diagonal entry")
        self.L, self.ok = _ic0(self.indptr, self.indices, low.data.astype(float))
        self.shift = shift

    def __call__(self, r):
        return _ic_apply(self.indptr, self.indices, self.L, r)


def build_preconditioner(G, kind: str):
    """Return ``(apply, name)``; IC(0) retries with growing diagonal shifts."""
    diag = G.diagonal()
    if kind == "incomplete_cholesky":
        for shift in SHIFT_SCHEDULE:
            ic = IncompleteCholesky(G, shift)
            if ic.ok and np.all(np.isfinite(ic.L)):
                if shift:
                    log.info("IC(0) needed a relative diagonal shift of %.0e", shift)
                return ic, "incomplete_cholesky" if not shift else f"incomplete_cholesky(shift={shift:.0e})"
        log.warning("incomplete Cholesky broke down; falling back to Jacobi")
        kind = "jacobi"
    if kind == "jacobi":
        inv = 1.0 / diag
        return (lambda r: inv * r), "jacobi"
    return (lambda r: r.copy()), "none"


def _check_symmetric(G, samples: int = 1000) -> None:
    coo = G.tocoo()
    if coo.nnz == 0:
        return
    rng = np.random.default_rng(0)
    pick = rng.choice(coo.nnz, size=min(samples, coo.nnz), replace=False)
    r, c = coo.row[pick], coo.col[pick]
    a = np.asarray(G[r, c]).ravel()
    b = np.asarray(G[c, r]).ravel()
    if not np.array_equal(a, b, equal_nan=True):
        raise SolverError("matrix is not symmetric")


def solve(ns: NormalSystem, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """PCG from a zero initial guess with an infinity-norm stopping rule.

    Converged when ``||G a - rhs||_inf <= max(abs_tol, rel_tol ||rhs||_inf)``.
    The quadratic energy ``a.G a / 2 - rhs.a`` is sampled every 100
    iterations into ``energy_history``.
    """
    t0 = time.perf_counter()
    G = sp.csr_matrix(ns.G)
    b = np.asarray(ns.rhs, dtype=float)
    _check_symmetric(G)
    if np.any(G.diagonal() <= 0.0):
        raise SolverError("diagonal must be positive")
    precond, pname = build_preconditioner(G, opts.preconditioner)
    target = max(opts.abs_tol, opts.rel_tol * float(np.max(np.abs(b), initial=0.0)))

    x = np.zeros_like(b)
    r = b.copy()
    res = float(np.max(np.abs(r), initial=0.0))
    energy = []
    it = 0
    restarts = 0
    if res > target:
        z = precond(r)
        p = z.copy()
        rz = r @ z
        while it < opts.max_iters:
            Gp = G @ p
            pGp = p @ Gp
            if not np.isfinite(pGp):
                raise SolverError("divergence")
            if pGp <= 0.0:
                break
            step = rz / pGp
            x += step * p
            r -= step * Gp
            it += 1
            res = float(np.max(np.abs(r)))
            if not np.isfinite(res):
                raise SolverError("divergence")
            if it % 100 == 0:
                energy.append(-0.5 * float(x @ (b + r)))
            if res <= target:
                # confirm against the true residual; on drift, restart from it
                r = b - G @ x
                res = float(np.max(np.abs(r)))
                if res <= target or restarts >= MAX_RESTARTS:
                    break
                restarts += 1
                z = precond(r)
                p = z.copy()
                rz = r @ z
                continue
            z = precond(r)
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
    # report the true residual, not the recursively updated one
    res = float(np.max(np.abs(b - G @ x), initial=0.0))
    converged = res <= target
    return SolveReport(
        alpha=x,
        iterations=it,
        final_residual_inf=res,
        epsilon_used=ns.epsilon,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        preconditioner=pname,
        energy_history=tuple(energy),
    )


def condition_estimate(ns_or_G, iterations: int = 50) -> dict:
    """Gershgorin bracket plus a power-iteration estimate of the top eigenvalue."""
    G = sp.csr_matrix(ns_or_G.G if isinstance(ns_or_G, NormalSystem) else ns_or_G)
    g_max, g_min = gershgorin_bounds(G)
    n = G.shape[0]
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(iterations):
        w = G @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    return {"gershgorin_max": g_max, "gershgorin_min": g_min, "power_max": lam}
