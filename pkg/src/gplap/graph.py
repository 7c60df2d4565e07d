"""Random geometric graph on the torus: neighbors within 2h, kernel weights,
degrees, label connectivity, fill distance.

Vertices are stored labeled-first so boundary conditions are index-range
checks. Two representations exist behind one Graph type:

* "csr": the exact edge list in compressed sparse rows (both directions,
  neighbor lists sorted by index). Built via a spatial hash grid; equals the
  brute-force pair scan.
* "window1d": d=1 only, used when the edge count would not fit memory (wide
  bandwidths). Coordinates are kept sorted with tripled shifted copies so
  every 2h-window is a contiguous slice; degrees and operator sums come from
  prefix sums of the piecewise-polynomial kernel moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import InvalidArgumentError
from .kernel import KernelProfile
from .torus import PointCloud, torus_distance, wrap

__all__ = [
    "LabelSet",
    "SpatialIndex",
    "Graph",
    "build_graph",
    "connected_to_labels",
    "fill_distance",
]

# strips per taper side for the window1d sliding-extrema machinery
WINDOW_STRIPS = 16


@dataclass(frozen=True)
class LabelSet:
    """Observation points with their values."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = wrap(np.atleast_2d(np.asarray(self.points, dtype=np.float64)))
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if pts.shape[0] != vals.shape[0]:
            raise InvalidArgumentError("labels: points and values length mismatch")
        if pts.shape[0] < 1:
            raise InvalidArgumentError("labels: need at least one observation")
        for i in range(pts.shape[0]):
            for j in range(i + 1, pts.shape[0]):
                if torus_distance(pts[i], pts[j]) <= 0.0:
                    raise InvalidArgumentError("labels: observation points must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


class SpatialIndex:
    """Uniform cell grid over the torus (cell size >= the query radius,
    clamped to <= 1/2 per axis). Every vertex lands in exactly one bucket;
    a radius-2h query inspects the 3^d surrounding buckets."""

    def __init__(self, points, radius):
        points = np.ascontiguousarray(points, dtype=np.float64)
        n, d = points.shape
        m = int(math.floor(1.0 / radius + 1e-12)) if radius < 0.5 else 2
        m = max(2, m)
        # keep the cell count proportionate to n
        while m > 2 and m**d > 4 * n + 64:
            m -= 1
        self.m = m
        self.d = d
        self.cell_size = 1.0 / m
        self.radius = radius
        coords = np.minimum((points * m).astype(np.int64), m - 1)
        flat = np.zeros(n, dtype=np.int64)
        for a in range(d):
            flat = flat * m + coords[:, a]
        self.point_cell = flat
        self.sort_idx = np.argsort(flat, kind="stable")
        ncell = m**d
        counts = np.bincount(flat, minlength=ncell)
        self.cell_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._build_neighbor_cells()

    def _build_neighbor_cells(self):
        m, d = self.m, self.d
        span = max(1, int(math.ceil(self.radius * m - 1e-12)))
        ncell = m**d
        cell_ids = np.arange(ncell, dtype=np.int64)
        coords = np.empty((ncell, d), dtype=np.int64)
        rem = cell_ids.copy()
        for a in range(d - 1, -1, -1):
            coords[:, a] = rem % m
            rem //= m
        offs = np.stack(
            np.meshgrid(*([np.arange(-span, span + 1)] * d), indexing="ij"),
            axis=-1,
        ).reshape(-1, d)
        nbr = (coords[None, :, :] + offs[:, None, :]) % m
        flat = np.zeros((offs.shape[0], ncell), dtype=np.int64)
        for a in range(d):
            flat = flat * m + nbr[:, :, a]
        flat.sort(axis=0)
        keep = np.ones_like(flat, dtype=bool)
        keep[1:] = flat[1:] != flat[:-1]
        counts = keep.sum(axis=0)
        self.cell_nbr_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.cell_nbr_ids = flat.T[keep.T].astype(np.int64)

    def bucket(self, cell_id):
        a, b = self.cell_start[cell_id], self.cell_start[cell_id + 1]
        return self.sort_idx[a:b]


def _ball_volume(d, r):
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d


@dataclass
class Graph:
    points: np.ndarray
    n_labels: int
    h: float
    profile: KernelProfile
    kind: str  # "csr" | "window1d"
    degrees: np.ndarray
    duplicate_warning: bool = False
    # csr representation
    indptr: np.ndarray | None = None
    indices: np.ndarray | None = None
    weights: np.ndarray | None = None
    # window1d representation (indices into the tripled sorted arrays)
    order: np.ndarray | None = None
    rank: np.ndarray | None = None
    xs: np.ndarray | None = None
    xs_ext: np.ndarray | None = None
    pow_prefix: np.ndarray | None = None
    pl_lo: np.ndarray | None = None
    pl_hi: np.ndarray | None = None
    str_lo: np.ndarray | None = None
    str_hi: np.ndarray | None = None
    strip_phi_hi: np.ndarray | None = None
    strip_phi_lo: np.ndarray | None = None
    taper_coeffs: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @property
    def phi0(self):
        return float(self.profile(np.float64(0.0)))

    def is_label(self, i):
        return i < self.n_labels

    @property
    def label_mask(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[: self.n_labels] = True
        return mask

    def neighbors(self, i):
        """(indices, weights) of the stored neighbors of vertex i (self
        excluded, zero weights dropped, sorted by vertex index)."""
        if self.kind == "csr":
            a, b = self.indptr[i], self.indptr[i + 1]
            return self.indices[a:b], self.weights[a:b]
        pos = self.rank[i]
        x = self.xs[pos]
        lo = np.searchsorted(self.xs_ext, x - 2.0 * self.h, side="right")
        hi = np.searchsorted(self.xs_ext, x + 2.0 * self.h, side="left")
        ext = np.arange(lo, hi)
        ext = ext[ext != pos + self.n_vertices]
        dist = np.abs(self.xs_ext[ext] - x)
        w = self.profile(dist / self.h)
        keep = w > 0.0
        nbr = self.order[ext[keep] % self.n_vertices]
        w = w[keep]
        srt = np.argsort(nbr, kind="stable")
        return nbr[srt], w[srt]

    def edge_count(self):
        if self.kind == "csr":
            return int(self.indices.shape[0]) // 2
        raise InvalidArgumentError("edge_count: implicit window graph stores no edge list")

    def iter_edges(self):
        """Yield (i, j, w) with i < j. Explicit graphs only."""
        if self.kind != "csr":
            raise InvalidArgumentError("edge dump needs an explicit graph")
        for i in range(self.n_vertices):
            a, b = self.indptr[i], self.indptr[i + 1]
            for k in range(a, b):
                j = int(self.indices[k])
                if j > i:
                    yield i, j, float(self.weights[k])


def _build_csr(pts, n_labels, h, profile):
    n = pts.shape[0]
    index = SpatialIndex(pts, radius=2.0 * h)
    npairs = _kernels.count_pairs(
        pts, index.sort_idx, index.cell_nbr_start, index.cell_nbr_ids,
        index.cell_start, index.point_cell, 2.0 * h,
    )
    ei = np.empty(npairs, dtype=np.int64)
    ej = np.empty(npairs, dtype=np.int64)
    ew = np.empty(npairs, dtype=np.float64)
    written, dup = _kernels.fill_pairs(
        pts, index.sort_idx, index.cell_nbr_start, index.cell_nbr_ids,
        index.cell_start, index.point_cell, 2.0 * h, h, profile.code,
        ei, ej, ew,
    )
    ei, ej, ew = ei[:written], ej[:written], ew[:written]
    rows = np.concatenate([ei, ej])
    cols = np.concatenate([ej, ei])
    vals = np.concatenate([ew, ew])
    srt = np.lexsort((cols, rows))
    rows, cols, vals = rows[srt], cols[srt], vals[srt]
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))]).astype(np.int64)
    phi0 = float(profile(np.float64(0.0)))
    degrees = np.bincount(rows, weights=vals, minlength=n) + phi0
    g = Graph(
        points=pts, n_labels=n_labels, h=h, profile=profile, kind="csr",
        degrees=degrees, duplicate_warning=bool(dup),
        indptr=indptr, indices=cols.astype(np.int64), weights=vals,
    )
    g._cache["spatial_index"] = index
    return g


def _build_window1d(pts, n_labels, h, profile):
    n = pts.shape[0]
    order = np.argsort(pts[:, 0], kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    xs = pts[order, 0].copy()
    xs_ext = np.concatenate([xs - 1.0, xs, xs + 1.0])
    pow_ext = np.stack([xs_ext**r for r in range(6)])
    pow_prefix = np.zeros((6, 3 * n + 1))
    np.cumsum(pow_ext, axis=1, out=pow_prefix[:, 1:])

    K = WINDOW_STRIPS
    pl_lo = np.searchsorted(xs_ext, xs - h, side="left").astype(np.int64)
    pl_hi = np.searchsorted(xs_ext, xs + h, side="right").astype(np.int64)
    str_lo = np.empty((2 * K, n), dtype=np.int64)
    str_hi = np.empty((2 * K, n), dtype=np.int64)
    phi_hi = np.empty(2 * K)
    phi_lo = np.empty(2 * K)
    for j in range(K):
        a = h * (1.0 + j / K)
        b = h * (1.0 + (j + 1) / K)
        # left strip j: [x-b, x-a)
        str_lo[j] = np.searchsorted(xs_ext, xs - b, side="left")
        str_hi[j] = np.searchsorted(xs_ext, xs - a, side="left")
        # right strip j: (x+a, x+b]
        str_lo[K + j] = np.searchsorted(xs_ext, xs + a, side="right")
        str_hi[K + j] = np.searchsorted(xs_ext, xs + b, side="right")
        phi_hi[j] = phi_hi[K + j] = float(profile(np.float64(1.0 + j / K)))
        phi_lo[j] = phi_lo[K + j] = float(profile(np.float64(1.0 + (j + 1) / K)))

    coeffs = profile.taper_coeffs()
    deg_sorted = _kernels.window_degrees(xs, pow_prefix, pl_lo, pl_hi,
                                         str_lo, str_hi, h, coeffs)
    degrees = np.empty(n)
    degrees[order] = deg_sorted
    dup = bool(np.any(np.diff(xs) == 0.0))
    return Graph(
        points=pts, n_labels=n_labels, h=h, profile=profile, kind="window1d",
        degrees=degrees, duplicate_warning=dup,
        order=order, rank=rank, xs=xs, xs_ext=xs_ext, pow_prefix=pow_prefix,
        pl_lo=pl_lo, pl_hi=pl_hi, str_lo=str_lo, str_hi=str_hi,
        strip_phi_hi=phi_hi, strip_phi_lo=phi_lo, taper_coeffs=coeffs,
    )


def build_graph(cloud: PointCloud, labels: LabelSet, h, profile: KernelProfile,
                max_explicit_edges=20_000_000):
    """Exact epsilon-graph over labels + cloud with weights Phi(dist/h).

    Labeled vertices come first. Every pair with torus distance < 2h and a
    positive weight is connected; degrees include the self term Phi(0).
    """
    if not (0.0 < h <= 0.25):
        raise InvalidArgumentError("bandwidth must satisfy 0 < h <= 1/4")
    if cloud.points.shape[0] < 1:
        raise InvalidArgumentError("cloud must be nonempty")
    if labels.d != cloud.d:
        raise InvalidArgumentError("labels and cloud dimension mismatch")
    pts = np.ascontiguousarray(
        np.vstack([labels.points, wrap(cloud.points)]), dtype=np.float64
    )
    n, d = pts.shape
    est_directed = n * n * min(_ball_volume(d, 2.0 * h), 1.0)
    if est_directed > max_explicit_edges:
        if d == 1:
            return _build_window1d(pts, labels.size, h, profile)
        raise InvalidArgumentError(
            f"graph too dense to materialize (~{est_directed:.2e} directed edges); "
            "use the streaming operators or raise max_explicit_edges"
        )
    return _build_csr(pts, labels.size, h, profile)


def connected_to_labels(g: Graph):
    """(all_reachable, unreachable_indices) via positive-weight paths from
    the labeled set."""
    n = g.n_vertices
    if g.n_labels == 0:
        return False, list(range(n))
    if g.kind == "csr":
        mat = csr_matrix(
            (g.weights, g.indices, g.indptr), shape=(n, n)
        )
        ncomp, comp = connected_components(mat, directed=False)
        label_comps = np.unique(comp[: g.n_labels])
        bad = np.where(~np.isin(comp, label_comps))[0]
        return bad.size == 0, bad.tolist()
    # circular gap analysis: components are the arcs between gaps >= 2h
    xs = g.xs
    n = xs.shape[0]
    gaps = np.empty(n)
    gaps[:-1] = np.diff(xs)
    gaps[-1] = xs[0] + 1.0 - xs[-1]
    breaks = np.where(gaps >= 2.0 * g.h)[0]
    if breaks.size == 0:
        return True, []
    comp = np.zeros(n, dtype=np.int64)
    # arc k runs from breaks[k-1]+1 .. breaks[k] (circularly)
    start = (breaks[-1] + 1) % n
    shifted = (np.arange(n) - start) % n
    bounds = np.sort((breaks - start) % n)
    comp = np.searchsorted(bounds, shifted, side="left")
    label_comps = np.unique(comp[g.rank[np.arange(g.n_labels)]])
    bad_sorted = np.where(~np.isin(comp, label_comps))[0]
    bad = g.order[bad_sorted]
    return bad.size == 0, sorted(int(b) for b in bad)


def fill_distance(g: Graph, grid_resolution=200):
    """Max over a uniform validation grid of the distance to the nearest
    vertex; upper-bounds the true fill distance up to one grid cell."""
    if grid_resolution < 10:
        raise InvalidArgumentError("grid_resolution must be >= 10 per axis")
    d = g.d
    key = ("fill", grid_resolution)
    if key in g._cache:
        return g._cache[key]
    axes = [np.arange(grid_resolution) / grid_resolution] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    tree = cKDTree(g.points, boxsize=1.0)
    dist, _ = tree.query(grid, k=1)
    val = float(dist.max())
    g._cache[key] = val
    return val
