"""Exact finite-set machinery: Delaunay cells, cell interpolants, and the
structural cross-check of the grid transform.

For a finite planar cloud with values, the average approximation is known in
closed form cell by cell once lambda and M are large enough: on a regular
(triangle) cell it equals the affine interpolant of the three vertices; on an
irregular cell (4+ cocircular generators) it equals the mean of the maximal
concave and minimal convex piecewise-affine interpolants p_plus/p_minus,
read off the upper and lower faces of the convex hull of the lifted points
(x_i, y_i, v_i). ``structural_check`` compares the grid pipeline against
this exact construction.

Triangulation is delegated to scipy's Delaunay (qhull) and post-processed:
edge-adjacent triangles whose circumcircles coincide within a relative
tolerance are merged into one irregular cell. Cell emission order is
deterministic (sorted vertex tuples).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial import ConvexHull, Delaunay as _SciDelaunay, cKDTree

from .errors import (
    CollinearInput,
    DuplicatePoints,
    ThresholdUnsatisfied,
)
from .grid import (
    GridSpec,
    SampledFunction,
    SampleMask,
    _pairwise_lipschitz,
)
from .transforms import TransformParams, average_approximation, resolve_module

__all__ = [
    "PointCloud",
    "DelaunayCell",
    "AffinePiece",
    "PiecewiseAffine",
    "triangulate",
    "cell_interpolant",
    "structural_check",
    "StructuralReport",
    "CellCheck",
]

_MAX_CELL_GENERATORS = 64
_ON_CIRCLE_TOL = 1e-7
_COPLANAR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Distinct planar points with one value each."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be (n, 2), got {pts.shape}")
        if vals.shape != (pts.shape[0],):
            raise ValueError("values length must match points")
        if not (np.isfinite(pts).all() and np.isfinite(vals).all()):
            raise ValueError("points and values must be finite")
        pts.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return self.points.shape[0]

    def diameter(self):
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(np.hypot(*(hi - lo)))


@dataclass(frozen=True)
class DelaunayCell:
    """One Delaunay cell: generators on an empty circumcircle.

    vertex_ids are ordered counterclockwise around the center. regular means
    a plain triangle; irregular cells have 4+ cocircular generators.
    """

    vertex_ids: Tuple[int, ...]
    center: Tuple[float, float]
    radius: float
    regular: bool


@dataclass(frozen=True, eq=False)
class AffinePiece:
    """ell(x, y) = a1*x + a2*y + b on a convex polygon."""

    polygon: np.ndarray  # (k, 2), counterclockwise
    a1: float
    a2: float
    b: float

    def gradient_norm(self):
        return math.hypot(self.a1, self.a2)


@dataclass(frozen=True, eq=False)
class PiecewiseAffine:
    """Concave ("min" combine) or convex ("max") piecewise-affine function.

    The pieces tile one Delaunay cell; because the function is the min (max)
    of its face planes, evaluation anywhere in the cell needs no point
    location.
    """

    pieces: Tuple[AffinePiece, ...]
    combine: str  # "min" or "max"

    def __call__(self, x, y):
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(y, dtype=float)
        planes = np.stack(
            [p.a1 * xs + p.a2 * ys + p.b for p in self.pieces], axis=0
        )
        if self.combine == "min":
            return planes.min(axis=0)
        return planes.max(axis=0)

    def max_gradient(self):
        return max(p.gradient_norm() for p in self.pieces)


def _circumcircle(p1, p2, p3):
    """Center and radius of the circle through three points."""
    a = 2.0 * np.array([p2 - p1, p3 - p1])
    rhs = np.array(
        [p2 @ p2 - p1 @ p1, p3 @ p3 - p1 @ p1]
    )
    try:
        c = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise CollinearInput("degenerate (collinear) triangle") from exc
    r = float(np.linalg.norm(p1 - c))
    return c, r


def _fit_circle(pts):
    """Least-squares circle through 4+ points."""
    a = np.column_stack([2.0 * pts, np.ones(len(pts))])
    rhs = (pts**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    center = sol[:2]
    radius = float(np.mean(np.linalg.norm(pts - center, axis=1)))
    return center, radius


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _validate_cloud(pc):
    if pc.n < 3:
        raise ValueError(f"triangulation needs >= 3 points, got {pc.n}")
    diam = pc.diameter()
    if diam == 0.0:
        raise DuplicatePoints("all points coincide")
    tree = cKDTree(pc.points)
    dist, _ = tree.query(pc.points, k=2)
    if dist[:, 1].min() < 1e-9 * diam:
        raise DuplicatePoints(
            f"two points closer than 1e-9 * diameter ({diam:.3g})"
        )
    centered = pc.points - pc.points.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals[1] <= 1e-12 * max(svals[0], 1.0):
        raise CollinearInput("all points are collinear")


def _triangulate_full(pc, cocircular_tol):
    """Cells plus the underlying scipy triangulation and simplex->cell map."""
    _validate_cloud(pc)
    tri = _SciDelaunay(pc.points)
    nsimp = len(tri.simplices)
    centers = np.empty((nsimp, 2))
    radii = np.empty(nsimp)
    for k, simp in enumerate(tri.simplices):
        c, r = _circumcircle(*pc.points[simp])
        centers[k] = c
        radii[k] = r

    uf = _UnionFind(nsimp)
    for k in range(nsimp):
        for nb in tri.neighbors[k]:
            if nb < 0:
                continue
            scale = max(radii[k], radii[nb])
            if (
                np.linalg.norm(centers[k] - centers[nb]) <= cocircular_tol * scale
                and abs(radii[k] - radii[nb]) <= cocircular_tol * scale
            ):
                uf.union(k, nb)

    groups = {}
    for k in range(nsimp):
        groups.setdefault(uf.find(k), []).append(k)

    raw = []
    for members in groups.values():
        ids = sorted({int(v) for k in members for v in tri.simplices[k]})
        if len(ids) > _MAX_CELL_GENERATORS:
            raise ValueError(
                f"cocircular cell with {len(ids)} generators exceeds "
                f"{_MAX_CELL_GENERATORS}"
            )
        if len(members) == 1:
            center, radius = centers[members[0]], radii[members[0]]
        else:
            center, radius = _fit_circle(pc.points[ids])
        offsets = np.linalg.norm(pc.points[ids] - center, axis=1)
        if np.abs(offsets - radius).max() > _ON_CIRCLE_TOL * radius:
            raise ValueError(
                "merged cell vertices leave the common circle; lower "
                "cocircular_tol"
            )
        # counterclockwise order around the center
        rel = pc.points[ids] - center
        order = np.argsort(np.arctan2(rel[:, 1], rel[:, 0]))
        ids = tuple(int(ids[o]) for o in order)
        raw.append((ids, center, radius, members))

    raw.sort(key=lambda item: tuple(sorted(item[0])))
    cells = []
    simplex_to_cell = np.empty(nsimp, dtype=int)
    for cell_idx, (ids, center, radius, members) in enumerate(raw):
        cells.append(
            DelaunayCell(
                vertex_ids=ids,
                center=(float(center[0]), float(center[1])),
                radius=float(radius),
                regular=len(ids) == 3,
            )
        )
        for k in members:
            simplex_to_cell[k] = cell_idx
    return cells, tri, simplex_to_cell


def triangulate(pc, cocircular_tol=1e-9):
    """Delaunay cells of the cloud, cocircular triangles merged.

    Parameters
    ----------
    pc : PointCloud
    cocircular_tol : float
        Relative tolerance (in units of circumradius) under which adjacent
        triangles are considered cocircular.

    Returns
    -------
    list of DelaunayCell

    Raises
    ------
    DuplicatePoints, CollinearInput
    """
    cells, _, _ = _triangulate_full(pc, cocircular_tol)
    return cells


def _plane_through(verts, vals):
    a = np.column_stack([verts, np.ones(len(verts))])
    coeffs, *_ = np.linalg.lstsq(a, vals, rcond=None)
    return coeffs  # a1, a2, b


def cell_interpolant(pc, cell):
    """Maximal concave / minimal convex interpolants over one cell.

    For a regular cell both equal the affine interpolant of the three
    vertices. For an irregular cell they are assembled from the upper and
    lower faces of the 3D convex hull of the lifted generators; a coplanar
    lift short-circuits to the common plane.

    Returns
    -------
    (p_plus, p_minus) : (PiecewiseAffine, PiecewiseAffine)
    """
    ids = np.array(cell.vertex_ids)
    verts = pc.points[ids]
    vals = pc.values[ids]
    polygon = verts  # already counterclockwise

    if cell.regular:
        a1, a2, b = _plane_through(verts, vals)
        piece = AffinePiece(polygon, float(a1), float(a2), float(b))
        return PiecewiseAffine((piece,), "min"), PiecewiseAffine((piece,), "max")

    # coplanar lift: single shared plane (degenerate-lift fast path)
    a1, a2, b = _plane_through(verts, vals)
    resid = np.abs(verts @ np.array([a1, a2]) + b - vals)
    scale = 1.0 + np.abs(vals).max()
    if resid.max() <= _COPLANAR_TOL * scale:
        piece = AffinePiece(polygon, float(a1), float(a2), float(b))
        return PiecewiseAffine((piece,), "min"), PiecewiseAffine((piece,), "max")

    lifted = np.column_stack([verts, vals])
    hull = ConvexHull(lifted)
    upper, lower = [], []
    for eq, simp in zip(hull.equations, hull.simplices):
        nx_, ny_, nz_, off = eq
        if abs(nz_) <= 1e-12:
            continue  # vertical side wall, not part of either graph
        # plane z = a1*x + a2*y + b from nx_*x + ny_*y + nz_*z + off = 0
        a1f = -nx_ / nz_
        a2f = -ny_ / nz_
        bf = -off / nz_
        piece = AffinePiece(lifted[simp][:, :2], float(a1f), float(a2f), float(bf))
        if nz_ > 0:
            upper.append(piece)
        else:
            lower.append(piece)
    if not upper or not lower:
        raise ValueError("lifted hull lacks an upper or lower sheet")
    return PiecewiseAffine(tuple(upper), "min"), PiecewiseAffine(tuple(lower), "max")


def _frobenius_condition(tri2d):
    """||E||_F * ||E^-1||_F of the edge matrix of a triangle."""
    e = np.array([tri2d[1] - tri2d[0], tri2d[2] - tri2d[0]])
    det = e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]
    if det == 0.0:
        return math.inf
    inv = np.array([[e[1, 1], -e[0, 1]], [-e[1, 0], e[0, 0]]]) / det
    return float(np.linalg.norm(e) * np.linalg.norm(inv))


@dataclass(frozen=True)
class CellCheck:
    """Per-cell slice of a structural report."""

    vertex_ids: Tuple[int, ...]
    regular: bool
    radius: float
    sigma: float
    lam_required: float
    m_required: float
    grad_measured: float
    grad_bound: float
    deviation: float
    n_nodes: int


@dataclass(frozen=True)
class StructuralReport:
    """Outcome of the exact-vs-grid comparison."""

    cells: Tuple[CellCheck, ...]
    lam_used: float
    m_used: float
    lipschitz: float
    max_snap_distance: float
    max_deviation: float
    tolerance: float
    passed: bool


def _snap_to_grid(pc, grid):
    """Snap points to nearest nodes; returns (snapped cloud, mask, values, max dist)."""
    member = np.zeros(grid.shape, dtype=bool)
    vals = np.zeros(grid.shape)
    snapped = np.empty_like(pc.points)
    max_d = 0.0
    for k, (x, y) in enumerate(pc.points):
        i, j = grid.nearest_node(x, y)
        if member[j, i]:
            raise DuplicatePoints(
                f"points {k} and an earlier one snap to the same grid node"
            )
        member[j, i] = True
        vals[j, i] = pc.values[k]
        snapped[k] = (grid.x0 + i * grid.h, grid.y0 + j * grid.h)
        max_d = max(max_d, math.hypot(snapped[k][0] - x, snapped[k][1] - y))
    mask = SampleMask(grid, member)
    sf = SampledFunction(mask, vals[member])
    return PointCloud(snapped, pc.values), sf, max_d


def structural_check(pc, p, grid, cocircular_tol=1e-9):
    """Compare the grid average approximation to the exact cell interpolants.

    The cloud is snapped to the grid first so both routes see identical
    sample data; the max snap distance is reported. Every cell must satisfy
    the interpolation thresholds for (lambda, M); otherwise
    ThresholdUnsatisfied reports the values that would.

    Parameters
    ----------
    pc : PointCloud
    p : TransformParams
        p.module=None resolves M automatically above every cell threshold.
    grid : GridSpec
        Evaluation grid; should cover the cloud hull.

    Returns
    -------
    StructuralReport
    """
    snapped, sf, max_snap = _snap_to_grid(pc, grid)
    cells, tri, simplex_to_cell = _triangulate_full(snapped, cocircular_tol)
    lip, _alpha = _pairwise_lipschitz(snapped.points, snapped.values)
    a0 = float(np.abs(snapped.values).max())
    hull_diam = snapped.diameter()

    interps = [cell_interpolant(snapped, c) for c in cells]
    centers = np.array([c.center for c in cells])
    radii = np.array([c.radius for c in cells])

    sigmas = np.empty(len(cells))
    lam_reqs = np.empty(len(cells))
    m_reqs = np.empty(len(cells))
    grads = np.empty(len(cells))
    bounds = np.empty(len(cells))
    for idx, cell in enumerate(cells):
        outside = np.setdiff1d(
            np.arange(snapped.n), np.array(cell.vertex_ids), assume_unique=False
        )
        if len(outside):
            d = np.linalg.norm(snapped.points[outside] - centers[idx], axis=1)
            sigma = float((d - radii[idx]).min())
            sigma = max(sigma, 0.0) or hull_diam  # touching point: fall back
        else:
            sigma = hull_diam
        p_plus, p_minus = interps[idx]
        grad = max(p_plus.max_gradient(), p_minus.max_gradient())
        cond = max(
            _frobenius_condition(piece.polygon[:3])
            for interpolant in (p_plus, p_minus)
            for piece in interpolant.pieces
        )
        r = radii[idx]
        csl = grad  # measured max face gradient; cond * lip is the worst case
        lam_req = 2.0 * a0 / (sigma * (2.0 * r + sigma)) + csl / sigma
        m_req = p.lam * r * r + csl * r + a0 + csl * csl / (4.0 * p.lam)
        sigmas[idx] = sigma
        lam_reqs[idx] = lam_req
        m_reqs[idx] = m_req
        grads[idx] = grad
        bounds[idx] = cond * lip

    lam_needed = float(lam_reqs.max())
    m_needed = float(m_reqs.max())
    if p.lam <= lam_needed:
        raise ThresholdUnsatisfied(
            f"lambda {p.lam} below structural threshold {lam_needed}",
            required_lam=lam_needed,
            required_m=m_needed,
        )
    if p.module is not None:
        if p.module <= m_needed:
            raise ThresholdUnsatisfied(
                f"module {p.module} below structural threshold {m_needed}",
                required_lam=lam_needed,
                required_m=m_needed,
            )
        m_used = float(p.module)
        run_params = p
    else:
        m_used = max(resolve_module(sf, p.lam), 1.5 * m_needed)
        run_params = TransformParams(p.lam, m_used, p.stencil, p.solver)

    result = average_approximation(
        SampledFunction(sf.mask, sf.values_on_k, m_used), run_params
    )
    avg = result.field.values

    x, y = grid.node_coords()
    nodes = np.column_stack([x.ravel(), y.ravel()])
    simp = tri.find_simplex(nodes)
    inside = simp >= 0
    cell_of_node = np.full(len(nodes), -1)
    cell_of_node[inside] = simplex_to_cell[simp[inside]]

    deviations = np.zeros(len(cells))
    counts = np.zeros(len(cells), dtype=int)
    flat = avg.ravel()
    for idx in range(len(cells)):
        sel = cell_of_node == idx
        counts[idx] = int(sel.sum())
        if not counts[idx]:
            continue
        p_plus, p_minus = interps[idx]
        exact = 0.5 * (p_plus(nodes[sel, 0], nodes[sel, 1]) +
                       p_minus(nodes[sel, 0], nodes[sel, 1]))
        deviations[idx] = float(np.abs(flat[sel] - exact).max())

    max_grad = float(grads.max())
    max_dev = float(deviations.max())
    tolerance = 10.0 * grid.h * (1.0 + max_grad)
    checks = tuple(
        CellCheck(
            vertex_ids=cells[i].vertex_ids,
            regular=cells[i].regular,
            radius=float(radii[i]),
            sigma=float(sigmas[i]),
            lam_required=float(lam_reqs[i]),
            m_required=float(m_reqs[i]),
            grad_measured=float(grads[i]),
            grad_bound=float(bounds[i]),
            deviation=float(deviations[i]),
            n_nodes=int(counts[i]),
        )
        for i in range(len(cells))
    )
    return StructuralReport(
        cells=checks,
        lam_used=float(p.lam),
        m_used=m_used,
        lipschitz=float(lip),
        max_snap_distance=float(max_snap),
        max_deviation=max_dev,
        tolerance=float(tolerance),
        passed=bool(max_dev <= tolerance),
    )
