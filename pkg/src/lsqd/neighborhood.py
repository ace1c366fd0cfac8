"""Neighbor sets ``V_i`` and ghost sets ``G_i``.

A neighborhood must (i) yield at least as many equations as local unknowns,
(ii) keep the global neighbor graph connected and (iii) contain at least
``P + 1`` distinct coordinates in every direction.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .basis import basis_size
from .geometry import LevelSetDomain
from .grid import DIR_VECTORS, PointCloud, Quadtree

log = logging.getLogger(__name__)

# Coordinates closer than this fraction of the box width count as equal.
COORD_TOL = 1e-9


@dataclass(frozen=True)
class Neighborhood:
    owner: int
    members: np.ndarray
    ghosts: np.ndarray
    extent: np.ndarray
    under_resolved: bool = False
    ghost_leaves: np.ndarray | None = None

    @property
    def eta(self) -> int:
        return len(self.members)


def min_neighbors(P: int, d: int) -> int:
    """Smallest neighborhood size with ``Q <= eta * (d + 2) - d - 1``.

    In 1D the neighborhood is also never smaller than three points.
    """
    if P < 1 or d not in (1, 2):
        raise ValueError("need P >= 1 and d in {1, 2}")
    if d == 1:
        return max(3, P + 1)
    return math.ceil((basis_size(P, d) + d + 1) / (d + 2))


def _extent(pts, owner_pt, fallback):
    ext = np.max(np.abs(pts - owner_pt), axis=0)
    return np.where(ext > 0.0, ext, fallback)


def build_neighborhood(
    i: int,
    cloud: PointCloud,
    tree: Quadtree,
    dom: LevelSetDomain,
    P: int,
    max_passes: int | None = None,
) -> Neighborhood:
    """Layered construction on the quadtree, one ring of direct neighbors per pass.

    Pass 1 takes every inside candidate. Later passes take a candidate only
    while the size condition is unmet, or when the independence condition is
    unmet in a direction and the candidate brings a new coordinate there.
    Outside candidates (including mirror cells beyond the bounding box) go
    to the ghost set. After ``max_passes`` (default ``P + 4``) the
    neighborhood is returned flagged as under-resolved.
    """
    if not 0 <= i < cloud.N:
        raise ValueError(f"point {i} is not an inside point")
    if max_passes is None:
        max_passes = P + 4
    eta_min = min_neighbors(P, 2)
    need = P + 1
    tol = COORD_TOL * dom.box_width
    nbr = tree.neighbors
    centers = tree.centers
    hws = tree.half_widths
    inside = tree.inside
    pol = tree.point_of_leaf

    leaf_i = int(cloud.leaf_ids[i])
    xi = centers[leaf_i]
    member_leaves = [leaf_i]
    seen = {leaf_i}
    ghost_pts, ghost_ids = [], []
    coord_keys = [{round(xi[0] / tol)}, {round(xi[1] / tol)}]

    def satisfied():
        return len(member_leaves) >= eta_min and all(len(s) >= need for s in coord_keys)

    def add(leaf, c):
        member_leaves.append(leaf)
        seen.add(leaf)
        coord_keys[0].add(round(c[0] / tol))
        coord_keys[1].add(round(c[1] / tol))

    ok = False
    for npass in range(1, max_passes + 1):
        cand = {}
        for lf in member_leaves:
            for k in range(4):
                nb = int(nbr[lf, k])
                if nb >= 0:
                    if nb not in seen and nb not in cand:
                        cand[nb] = centers[nb]
                else:
                    key = ("virtual", lf, k)
                    if key not in seen and key not in cand:
                        cand[key] = centers[lf] + 2.0 * hws[lf] * DIR_VECTORS[k]
        if not cand:
            break
        keys = list(cand)
        pts = np.array([cand[k] for k in keys])
        rel = pts - xi
        ang = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2.0 * np.pi)
        order = np.lexsort((np.hypot(rel[:, 0], rel[:, 1]), ang))
        for o in order:
            key, c = keys[o], pts[o]
            if isinstance(key, tuple):
                seen.add(key)
                if float(dom.value(c)) >= 0.0:
                    ghost_pts.append(c)
                    ghost_ids.append(-1)
                continue
            if not inside[key]:
                seen.add(key)
                ghost_pts.append(c)
                ghost_ids.append(key)
                continue
            if npass == 1 or len(member_leaves) < eta_min:
                add(key, c)
                continue
            for dim in range(2):
                if len(coord_keys[dim]) < need and round(c[dim] / tol) not in coord_keys[dim]:
                    add(key, c)
                    break
        if satisfied():
            ok = True
            break

    members = pol[np.array(member_leaves)]
    pts = centers[np.array(member_leaves)]
    return Neighborhood(
        owner=i,
        members=members,
        ghosts=np.array(ghost_pts).reshape(-1, 2),
        extent=_extent(pts, xi, hws[leaf_i]),
        under_resolved=not ok,
        ghost_leaves=np.array(ghost_ids, dtype=np.int64),
    )


def build_neighborhood_1d(i: int, cloud: PointCloud, P: int) -> Neighborhood:
    """Owner, its left and right neighbors, then the closest remaining points.

    Interval endpoints adjacent to any member become the ghost (boundary)
    sites.
    """
    N = cloud.N
    if not 0 <= i < N:
        raise ValueError(f"point {i} is not an inside point")
    x = cloud.points[:N, 0]
    eta = min(min_neighbors(P, 1), N)
    members = [i] + [j for j in (i - 1, i + 1) if 0 <= j < N]
    lo, hi = i - 2, i + 2
    # remaining slots go to the nearest unused point, left on ties
    while len(members) < eta:
        dl = x[i] - x[lo] if lo >= 0 else np.inf
        dr = x[hi] - x[i] if hi < N else np.inf
        if dl <= dr:
            members.append(lo)
            lo -= 1
        else:
            members.append(hi)
            hi += 1
    members = np.array(members, dtype=np.int64)
    ghosts = []
    if 0 in members:
        ghosts.append(cloud.points[N])
    if N - 1 in members:
        ghosts.append(cloud.points[N + 1])
    fallback = np.max(cloud.cell_extent[i])
    return Neighborhood(
        owner=i,
        members=members,
        ghosts=np.array(ghosts).reshape(-1, 1),
        extent=_extent(x[members][:, None], x[i], fallback),
        under_resolved=len(members) < min_neighbors(P, 1),
    )


def build_all(cloud: PointCloud, P: int, tree: Quadtree | None = None, dom: LevelSetDomain | None = None):
    if cloud.d == 1:
        hoods = [build_neighborhood_1d(i, cloud, P) for i in range(cloud.N)]
    else:
        hoods = [build_neighborhood(i, cloud, tree, dom, P) for i in range(cloud.N)]
    n_bad = sum(h.under_resolved for h in hoods)
    if n_bad:
        log.warning("%d of %d neighborhoods are under-resolved for P=%d", n_bad, cloud.N, P)
    return hoods


def connectivity_check(hoods, N: int) -> bool:
    """True when the neighbor graph (edge directions ignored) is connected."""
    if N <= 1:
        return True
    rows = np.concatenate([np.full(h.eta, h.owner) for h in hoods])
    cols = np.concatenate([h.members for h in hoods])
    g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(N, N))
    n_comp, _ = connected_components(g, directed=True, connection="weak")
    return n_comp == 1


def dump_csv(hoods, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "eta", "ghost_count", "under_resolved"])
        for h in hoods:
            w.writerow([h.owner, h.eta, len(h.ghosts), int(h.under_resolved)])
