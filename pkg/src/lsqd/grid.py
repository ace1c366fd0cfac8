"""Point clouds: random 1D points with midpoint splitting, and cell-centered
non-graded quadtrees over the domain's bounding box."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import LevelSetDomain

# Direction order is counterclockwise starting to the right.
DIRECTIONS = ("+x", "+y", "-x", "-y")
DIR_VECTORS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
PROBE_OFFSET = 1e-3


@dataclass(frozen=True)
class GridConfig:
    mode: str = "uniform"
    base_depth: int = 4
    random_seed: int = 0
    split_probability: float = 0.5
    max_extra_depth: int = 3
    splits: int = 0

    def __post_init__(self):
        if self.mode not in ("uniform", "random"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if self.base_depth < 1:
            raise ValueError("base_depth must be >= 1")
        if self.splits < 0:
            raise ValueError("splits must be >= 0")
        if not 0.0 <= self.split_probability <= 1.0:
            raise ValueError("split_probability must lie in [0, 1]")


@dataclass
class QuadtreeCell:
    center: tuple
    half_width: tuple
    depth: int
    ix: int
    iy: int
    children: list = field(default_factory=list)
    leaf_index: Optional[int] = None
    cell_id: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def split(self):
        cx, cy = self.center
        hx, hy = 0.5 * self.half_width[0], 0.5 * self.half_width[1]
        d = self.depth + 1
        self.children = [
            QuadtreeCell((cx + sx * hx, cy + sy * hy), (hx, hy), d, 2 * self.ix + bx, 2 * self.iy + by)
            for (sx, bx), (sy, by) in (
                ((-1, 0), (-1, 0)),
                ((1, 1), (-1, 0)),
                ((-1, 0), (1, 1)),
                ((1, 1), (1, 1)),
            )
        ]
        return self.children


@dataclass
class PointCloud:
    """Unknown locations ``x_i``; inside points come first (indices ``0..N-1``).

    ``cell_extent`` holds leaf half-widths in 2D and the half-gaps to the left
    and right neighbors in 1D. In 1D the two interval endpoints are appended
    after the inside points as boundary evaluation sites (``inside=False``).
    """

    points: np.ndarray
    cell_extent: np.ndarray
    inside: np.ndarray
    d: int
    leaf_ids: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return int(np.count_nonzero(self.inside))

    @property
    def inside_points(self) -> np.ndarray:
        return self.points[: self.N]

    @property
    def h(self) -> float:
        """Largest cell width among inside points."""
        return float(2.0 * np.max(self.cell_extent[: self.N]))


def _unit_uniform(seed: int, depth: int, ix: int, iy: int) -> float:
    ss = np.random.SeedSequence(entropy=seed & (2**64 - 1), spawn_key=(depth, ix, iy))
    return float(ss.generate_state(1, dtype=np.uint64)[0]) / 2.0**64


class Quadtree:
    """Quadtree over the domain's bounding box with flat per-leaf arrays."""

    def __init__(self, root: QuadtreeCell, dom: LevelSetDomain):
        self.root = root
        self.domain = dom
        (x0, x1), (y0, y1) = dom.bounding_box
        self.origin = np.array([x0, y0])
        self.box_size = np.array([x1 - x0, y1 - y0])
        self.leaves: list[QuadtreeCell] = []
        stack = [root]
        while stack:
            c = stack.pop()
            if c.children:
                stack.extend(reversed(c.children))
            else:
                c.cell_id = len(self.leaves)
                self.leaves.append(c)
        self.centers = np.array([c.center for c in self.leaves], dtype=float)
        self.half_widths = np.array([c.half_width for c in self.leaves], dtype=float)
        self.depths = np.array([c.depth for c in self.leaves], dtype=np.int64)
        self.index = np.array([(c.ix, c.iy) for c in self.leaves], dtype=np.int64)
        self.inside = np.asarray(dom.value(self.centers) < 0.0)
        self.point_of_leaf = np.full(len(self.leaves), -1, dtype=np.int64)
        inside_ids = np.flatnonzero(self.inside)
        self.point_of_leaf[inside_ids] = np.arange(len(inside_ids))
        for lid in inside_ids:
            self.leaves[lid].leaf_index = int(self.point_of_leaf[lid])
        self.leaf_of_point = inside_ids
        self.max_depth = int(self.depths.max())
        self._keys = {}
        for depth in np.unique(self.depths):
            sel = np.flatnonzero(self.depths == depth)
            keys = (self.index[sel, 0] << 32) | self.index[sel, 1]
            order = np.argsort(keys)
            self._keys[int(depth)] = (keys[order], sel[order])
        self.probe_delta = PROBE_OFFSET * float(self.half_widths.min())
        self._neighbors = None

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def locate(self, pts) -> np.ndarray:
        """Leaf id containing each point, -1 outside the bounding box."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.full(len(pts), -1, dtype=np.int64)
        rel = (pts - self.origin) / self.box_size
        ok = np.all((rel >= 0.0) & (rel <= 1.0), axis=1)
        for depth, (keys, ids) in self._keys.items():
            n = 1 << depth
            ij = np.clip(np.floor(rel * n).astype(np.int64), 0, n - 1)
            k = (ij[:, 0] << 32) | ij[:, 1]
            pos = np.minimum(np.searchsorted(keys, k), len(keys) - 1)
            hit = ok & (keys[pos] == k) & (out < 0)
            out[hit] = ids[pos[hit]]
        return out

    @property
    def neighbors(self) -> np.ndarray:
        """``(n_leaves, 4)`` direct-neighbor table in ``DIRECTIONS`` order."""
        if self._neighbors is None:
            table = np.empty((self.n_leaves, 4), dtype=np.int64)
            for k, v in enumerate(DIR_VECTORS):
                probe = self.centers + v * (self.half_widths + self.probe_delta)
                table[:, k] = self.locate(probe)
            self._neighbors = table
        return self._neighbors

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_id", "depth", "cx", "cy", "hx", "hy", "inside"])
            for lid in range(self.n_leaves):
                cx, cy = self.centers[lid]
                hx, hy = self.half_widths[lid]
                w.writerow([lid, int(self.depths[lid]), repr(cx), repr(cy), repr(hx), repr(hy), int(self.inside[lid])])


def build_quadtree(dom: LevelSetDomain, cfg: GridConfig):
    """Build the tree and the cloud of inside leaf centers.

    Random mode refines each base leaf independently: at every extra level a
    leaf splits with probability ``cfg.split_probability``, the draw keyed on
    ``(seed, depth, ix, iy)`` so the result does not depend on traversal
    order. No 2:1 balance is enforced.
    """
    (x0, x1), (y0, y1) = dom.bounding_box
    root = QuadtreeCell((0.5 * (x0 + x1), 0.5 * (y0 + y1)), (0.5 * (x1 - x0), 0.5 * (y1 - y0)), 0, 0, 0)
    level = [root]
    for _ in range(cfg.base_depth):
        level = [ch for c in level for ch in c.split()]
    leaves = level
    if cfg.mode == "random":
        frontier = leaves
        leaves = []
        for _ in range(cfg.max_extra_depth):
            nxt = []
            for c in frontier:
                if _unit_uniform(cfg.random_seed, c.depth, c.ix, c.iy) < cfg.split_probability:
                    nxt.extend(c.split())
                else:
                    leaves.append(c)
            frontier = nxt
        leaves.extend(frontier)
    for _ in range(cfg.splits):
        leaves = [ch for c in leaves for ch in c.split()]
    tree = Quadtree(root, dom)
    ids = tree.leaf_of_point
    cloud = PointCloud(
        points=tree.centers[ids].copy(),
        cell_extent=tree.half_widths[ids].copy(),
        inside=np.ones(len(ids), dtype=bool),
        d=2,
        leaf_ids=ids.copy(),
    )
    if cloud.N < 1:
        raise ValueError("no leaf center lies inside the domain")
    return tree, cloud


def direct_neighbor(tree: Quadtree, cell: QuadtreeCell, direction: str) -> Optional[QuadtreeCell]:
    """Leaf across the face of ``cell`` in ``direction`` on the cell's center axis."""
    k = DIRECTIONS.index(direction)
    lid = int(tree.neighbors[cell.cell_id, k])
    return None if lid < 0 else tree.leaves[lid]


def build_1d_cloud(n0: int, seed: int, splits: int, interval=(0.0, 1.0)) -> PointCloud:
    """``n0`` random interior points, refined by inserting every adjacent midpoint.

    The endpoints take part in the splitting, so after ``s`` splits there are
    ``(n0 + 1) * 2**s - 1`` interior points.
    """
    if n0 < 3:
        raise ValueError("n0 must be >= 3")
    lo, hi = map(float, interval)
    rng = np.random.default_rng(seed)
    x = np.concatenate([[lo], np.sort(rng.uniform(lo, hi, n0)), [hi]])
    for _ in range(splits):
        mids = 0.5 * (x[:-1] + x[1:])
        y = np.empty(2 * len(x) - 1)
        y[0::2] = x
        y[1::2] = mids
        x = y
    gaps = np.diff(x)
    interior = x[1:-1]
    extent = 0.5 * np.stack([gaps[:-1], gaps[1:]], axis=1)
    points = np.concatenate([interior, [lo, hi]])[:, None]
    extent = np.vstack([extent, [[0.0, 0.5 * gaps[0]], [0.5 * gaps[-1], 0.0]]])
    inside = np.concatenate([np.ones(len(interior), dtype=bool), [False, False]])
    return PointCloud(points=points, cell_extent=extent, inside=inside, d=1)
