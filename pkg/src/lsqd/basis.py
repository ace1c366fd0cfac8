"""Centered, rescaled monomial bases.

Around a point ``c`` with neighborhood extents ``s`` the basis functions are
``prod_d ((x_d - c_d) / s_d) ** p_d`` with total degree ``sum(p) <= P``.
Basis indices ``q`` are 0-based; ``q = 0`` is always the constant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def exponents(P: int, d: int) -> np.ndarray:
    """Exponent tuples ordered by total degree, then by ``p_x`` descending."""
    if P < 0:
        raise ValueError("P must be >= 0")
    if d == 1:
        exps = [(k,) for k in range(P + 1)]
    elif d == 2:
        exps = [(px, t - px) for t in range(P + 1) for px in range(t, -1, -1)]
    else:
        raise ValueError("only d in {1, 2} is supported")
    out = np.array(exps, dtype=np.int64)
    out.flags.writeable = False
    return out


def basis_size(P: int, d: int) -> int:
    return P + 1 if d == 1 else (P + 1) * (P + 2) // 2


def _powers(xi, P):
    # pw[k] = xi**k with pw[0] = 1 exactly (0**0 := 1)
    pw = np.empty((P + 1,) + xi.shape)
    pw[0] = 1.0
    for k in range(1, P + 1):
        pw[k] = pw[k - 1] * xi
    return pw


def _factor_tables(xi, P):
    """Value, first- and second-derivative factors of each 1D monomial."""
    pw = _powers(xi, P)
    k = np.arange(P + 1).reshape((-1,) + (1,) * xi.ndim)
    d1 = np.zeros_like(pw)
    d1[1:] = k[1:] * pw[:-1]
    d2 = np.zeros_like(pw)
    if P >= 2:
        d2[2:] = k[2:] * (k[2:] - 1) * pw[:-2]
    return pw, d1, d2


def monomials(xi, inv_scale, P, derivs=("value",)):
    """Evaluate the basis at scaled offsets ``xi`` of shape ``(n, d)``.

    ``inv_scale`` (shape ``(n, d)`` or ``(d,)``) converts derivatives from
    scaled to physical coordinates. Returns a dict with the requested keys:
    ``value`` ``(n, Q)``, ``grad`` ``(n, Q, d)``, ``laplacian`` ``(n, Q)``.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    n, d = xi.shape
    inv_scale = np.broadcast_to(np.asarray(inv_scale, dtype=float), (n, d))
    exps = exponents(P, d)
    pw, d1, d2 = _factor_tables(xi, P)
    # fac[e_k, :, k] -> (Q, n) factor of direction k
    cols = np.arange(d)
    val_f = pw[exps, :, cols]  # (Q, d, n)
    out = {}
    if "value" in derivs:
        out["value"] = np.prod(val_f, axis=1).T
    if "grad" in derivs or "laplacian" in derivs:
        d1_f = d1[exps, :, cols]
        d2_f = d2[exps, :, cols]
        grads = []
        laps = np.zeros((len(exps), n))
        for k in range(d):
            others = np.prod(np.delete(val_f, k, axis=1), axis=1) if d > 1 else 1.0
            grads.append(d1_f[:, k] * others * inv_scale[:, k])
            laps += d2_f[:, k] * others * inv_scale[:, k] ** 2
        if "grad" in derivs:
            out["grad"] = np.stack(grads, axis=-1).transpose(1, 0, 2)
        if "laplacian" in derivs:
            out["laplacian"] = laps.T
    return out


@dataclass(frozen=True)
class LocalBasis:
    center: np.ndarray
    scale: np.ndarray
    degree: int

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        s = np.atleast_1d(np.asarray(self.scale, dtype=float))
        if c.shape != s.shape:
            raise ValueError("center and scale must have the same dimension")
        if np.any(s <= 0.0):
            raise ValueError("scale components must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "scale", s)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def exponents(self) -> np.ndarray:
        return exponents(self.degree, self.d)

    @property
    def Q(self) -> int:
        return basis_size(self.degree, self.d)

    def _scaled(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.d)
        return (pts - self.center) / self.scale

    def evaluate(self, pts, derivs=("value",)):
        return monomials(self._scaled(pts), 1.0 / self.scale, self.degree, derivs)

    def values(self, pts):
        return self.evaluate(pts)["value"]

    def gradients(self, pts):
        return self.evaluate(pts, ("grad",))["grad"]

    def laplacians(self, pts):
        return self.evaluate(pts, ("laplacian",))["laplacian"]

    def eval(self, q: int, p) -> float:
        return float(self.values(p)[0, q])

    def eval_grad(self, q: int, p) -> np.ndarray:
        return self.gradients(p)[0, q]

    def eval_laplacian(self, q: int, p) -> float:
        return float(self.laplacians(p)[0, q])
