"""Level-set description of the computational domain.

Points are numpy arrays of shape ``(2,)`` or batches of shape ``(n, 2)``;
every value/gradient function below accepts both.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

OCTOFOIL_RADIUS = 4.0 / 5.0
OCTOFOIL_AMPLITUDE = 4.0 / 25.0
OCTOFOIL_LOBES = 8

BISECTION_MAX_ITER = 200
BISECTION_TOL = 1e-12


class GeometryError(ValueError):
    pass


def octofoil_value(p):
    """Signed distance-like level set of the eight-lobed octofoil.

    The angular term uses the full polar angle (``arctan2``), with the angle
    at the origin taken as 0.
    """
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    return r - (OCTOFOIL_RADIUS + OCTOFOIL_AMPLITUDE * np.sin(OCTOFOIL_LOBES * theta))


def octofoil_gradient(p):
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    r2 = x * x + y * y
    if np.any(r2 == 0.0):
        raise GeometryError("gradient singular at origin")
    r = np.sqrt(r2)
    theta = np.arctan2(y, x)
    # d(theta)/dx = -y/r^2, d(theta)/dy = x/r^2
    c = OCTOFOIL_LOBES * OCTOFOIL_AMPLITUDE * np.cos(OCTOFOIL_LOBES * theta)
    gx = x / r + c * y / r2
    gy = y / r - c * x / r2
    return np.stack([gx, gy], axis=-1)


def box_value(p, center=(0.0, 0.0), half_width=(1.0, 1.0)):
    """Max-coordinate level set of an axis-aligned box."""
    p = np.asarray(p, dtype=float)
    d = np.abs(p - np.asarray(center)) - np.asarray(half_width)
    return np.max(d, axis=-1)


def box_gradient(p, center=(0.0, 0.0), half_width=(1.0, 1.0)):
    # Gradient of the active face; ties (corners, diagonals) go to x.
    p = np.asarray(p, dtype=float)
    rel = p - np.asarray(center)
    d = np.abs(rel) - np.asarray(half_width)
    axis = np.where(d[..., 1] > d[..., 0], 1, 0)
    g = np.zeros_like(p)
    sgn = np.where(np.take_along_axis(rel, axis[..., None], axis=-1) < 0.0, -1.0, 1.0)
    np.put_along_axis(g, axis[..., None], sgn, axis=-1)
    return g


@dataclass(frozen=True)
class LevelSetDomain:
    """Implicit domain ``{x : value(x) < 0}`` inside a rectangular root cell."""

    kind: str
    value_fn: Callable = field(repr=False)
    gradient_fn: Callable = field(repr=False)
    bounding_box: tuple = ((-1.0, 1.0), (-1.0, 1.0))

    def value(self, p):
        return self.value_fn(p)

    def gradient(self, p):
        return self.gradient_fn(p)

    def contains(self, p):
        return self.value(p) < 0.0

    @property
    def box_width(self) -> float:
        return max(hi - lo for lo, hi in self.bounding_box)


def square_domain(half_width: float = 1.0, bounding_box=((-1.0, 1.0), (-1.0, 1.0))):
    """Square ``[-h, h]^2``; with the default box the domain edge is the box edge."""
    hw = (half_width, half_width)
    return LevelSetDomain(
        kind="square",
        value_fn=lambda p: box_value(p, (0.0, 0.0), hw),
        gradient_fn=lambda p: box_gradient(p, (0.0, 0.0), hw),
        bounding_box=bounding_box,
    )


def octofoil_domain():
    return LevelSetDomain(kind="octofoil", value_fn=octofoil_value, gradient_fn=octofoil_gradient)


def custom_domain(value_fn, gradient_fn, bounding_box=((-1.0, 1.0), (-1.0, 1.0))):
    return LevelSetDomain("custom", value_fn, gradient_fn, bounding_box)


def locate_boundary_point(dom: LevelSetDomain, a, b, tol: float = BISECTION_TOL):
    """Bisect the segment ``[a, b]`` for a zero of the level set.

    ``tol`` is relative to the segment length. Raises if the endpoint values
    have the same strict sign.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if tol <= 0:
        raise GeometryError("tol must be positive")
    fa = float(dom.value(a))
    fb = float(dom.value(b))
    if fa == 0.0:
        return a.copy()
    if fb == 0.0:
        return b.copy()
    if fa * fb > 0.0:
        raise GeometryError("no sign change on segment")
    lo, hi = 0.0, 1.0
    d = b - a
    for _ in range(BISECTION_MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = float(dom.value(a + mid * d))
        if fm == 0.0:
            return a + mid * d
        if (fm < 0.0) == (fa < 0.0):
            lo = mid
        else:
            hi = mid
    return a + 0.5 * (lo + hi) * d


def outward_normal(dom: LevelSetDomain, p):
    g = np.asarray(dom.gradient(p), dtype=float)
    n = np.linalg.norm(g)
    if not np.isfinite(n) or n == 0.0:
        raise GeometryError("degenerate normal")
    return g / n
