"""Uniform-grid scalar fields, sample masks, and extended functions.

A grid node (i, j) sits at (x0 + i*h, y0 + j*h); nodes are ordered row-major
(j outer, i inner) so a field is stored as an (ny, nx) array with
``values[j, i]`` the value at node (i, j). 1D problems use ny = 1.

A sampled function assigns values to a subset K of nodes together with a
module M > max |f_K|. Its two extensions place +M or -M on every node off K;
they are the raw material of the lower/upper transform pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ModuleTooSmall, NonFiniteValue, SingleSample

__all__ = [
    "GridSpec",
    "ScalarField",
    "SampleMask",
    "SampledFunction",
    "extend",
    "lipschitz_lower_bound",
    "LipschitzBound",
]

# exact pair scan up to this many sample nodes, nearest-neighbor scan beyond
_EXACT_PAIR_CAP = 4096


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid, equal spacing h in both axes.

    Parameters
    ----------
    nx, ny : int
        Node counts; nx >= 2, ny >= 1 (ny = 1 encodes a 1D grid).
    x0, y0 : float
        Coordinates of node (0, 0).
    h : float
        Grid spacing, > 0.
    """

    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    h: float = 1.0

    def __post_init__(self):
        if self.nx < 2:
            raise ValueError(f"nx must be >= 2, got {self.nx}")
        if self.ny < 1:
            raise ValueError(f"ny must be >= 1, got {self.ny}")
        if not self.h > 0:
            raise ValueError(f"h must be > 0, got {self.h}")

    @property
    def shape(self):
        """Array shape (ny, nx) used for field storage."""
        return (self.ny, self.nx)

    @property
    def n_nodes(self):
        return self.nx * self.ny

    def xs(self):
        """x coordinates of the nx columns."""
        return self.x0 + self.h * np.arange(self.nx)

    def ys(self):
        """y coordinates of the ny rows."""
        return self.y0 + self.h * np.arange(self.ny)

    def node_coords(self):
        """Coordinate arrays (X, Y), each of shape (ny, nx)."""
        return np.meshgrid(self.xs(), self.ys())

    def center(self):
        """Geometric center of the grid bounding box."""
        cx = self.x0 + 0.5 * self.h * (self.nx - 1)
        cy = self.y0 + 0.5 * self.h * (self.ny - 1)
        return cx, cy

    def bbox_diameter(self):
        """Diagonal length of the grid bounding box."""
        return float(np.hypot(self.h * (self.nx - 1), self.h * (self.ny - 1)))

    def nearest_node(self, x, y):
        """Indices (i, j) of the node closest to (x, y), clipped to the grid."""
        i = int(np.clip(round((x - self.x0) / self.h), 0, self.nx - 1))
        j = int(np.clip(round((y - self.y0) / self.h), 0, self.ny - 1))
        return i, j


def _as_grid_array(values, spec, dtype=float):
    a = np.asarray(values, dtype=dtype)
    if a.shape == (spec.n_nodes,):
        a = a.reshape(spec.shape)
    if a.shape != spec.shape:
        raise ValueError(
            f"values shape {a.shape} does not match grid {spec.shape}"
        )
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Finite real values on every node of a grid.

    The value array is read-only after construction; fields are safe to share
    across threads.
    """

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        a = _as_grid_array(self.values, self.spec)
        if not np.isfinite(a).all():
            raise NonFiniteValue("field contains non-finite values")
        object.__setattr__(self, "values", a)

    def with_values(self, values):
        """New field on the same grid."""
        return ScalarField(self.spec, values)


@dataclass(frozen=True, eq=False)
class SampleMask:
    """Boolean membership of grid nodes in the sample set K; K is nonempty."""

    spec: GridSpec
    member: np.ndarray

    def __post_init__(self):
        a = _as_grid_array(self.member, self.spec, dtype=bool)
        if not a.any():
            raise ValueError("sample mask is empty")
        object.__setattr__(self, "member", a)

    @property
    def count(self):
        return int(self.member.sum())

    def node_coords(self):
        """Coordinates of member nodes, shape (count, 2), row-major order."""
        jj, ii = np.nonzero(self.member)
        return np.column_stack(
            [self.spec.x0 + self.spec.h * ii, self.spec.y0 + self.spec.h * jj]
        )


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values on the member nodes of a mask plus the extension module.

    ``values_on_k`` follows row-major member order (the order produced by
    ``field[mask]``). ``module`` is a finite M > max |f_K|, or None meaning
    "resolve automatically at transform time".
    """

    mask: SampleMask
    values_on_k: np.ndarray
    module: Optional[float] = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values_on_k, dtype=float))
        if v.shape != (self.mask.count,):
            raise ValueError(
                f"expected {self.mask.count} sample values, got shape {v.shape}"
            )
        if not np.isfinite(v).all():
            raise NonFiniteValue("sample values contain non-finite entries")
        v.flags.writeable = False
        object.__setattr__(self, "values_on_k", v)
        if self.module is not None:
            m = float(self.module)
            if not np.isfinite(m) or m <= 0:
                raise ValueError(f"module must be finite and > 0, got {m}")
            if (np.abs(v) >= m).any():
                raise ModuleTooSmall(
                    f"module {m} does not dominate max |f_K| = {np.abs(v).max()}"
                )
            object.__setattr__(self, "module", m)

    @classmethod
    def from_field(cls, field, mask, module=None):
        """Sample an existing field on the member nodes of a mask."""
        if field.spec != mask.spec:
            raise ValueError("field and mask live on different grids")
        return cls(mask, field.values[mask.member], module)

    @property
    def spec(self):
        return self.mask.spec

    @property
    def max_abs(self):
        """A_0 = max |f_K|."""
        return float(np.abs(self.values_on_k).max())


def extend(sf, sign, module=None):
    """Extended field: f_K on member nodes, +M or -M elsewhere.

    Parameters
    ----------
    sf : SampledFunction
    sign : {"plus", "minus"}
        Which extension to build.
    module : float, optional
        Overrides sf.module; required when sf.module is None (auto).

    Returns
    -------
    ScalarField
    """
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    m = sf.module if module is None else float(module)
    if m is None:
        raise ValueError("module is unresolved; pass an explicit value")
    if not np.isfinite(m):
        raise NonFiniteValue(f"module must be finite, got {m}")
    if (np.abs(sf.values_on_k) >= m).any():
        raise ModuleTooSmall(
            f"module {m} does not dominate max |f_K| = {sf.max_abs}"
        )
    fill = m if sign == "plus" else -m
    out = np.full(sf.spec.shape, fill)
    out[sf.mask.member] = sf.values_on_k
    return ScalarField(sf.spec, out)


class LipschitzBound(NamedTuple):
    l: float
    alpha: float


def _pairwise_lipschitz(points, values, chunk=512):
    """Exact max |df|/|dx| and min pair distance over all point pairs."""
    n = len(points)
    l_best = 0.0
    a_best = np.inf
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        d = points[lo:hi, None, :] - points[None, :, :]
        dist = np.hypot(d[..., 0], d[..., 1])
        dv = np.abs(values[lo:hi, None] - values[None, :])
        # strict upper triangle of this block row
        cols = np.arange(n)[None, :]
        rows = np.arange(lo, hi)[:, None]
        sel = (cols > rows) & (dist > 0)
        if sel.any():
            l_best = max(l_best, float((dv[sel] / dist[sel]).max()))
            a_best = min(a_best, float(dist[sel].min()))
    return l_best, a_best


def _neighbor_lipschitz(points, values, k=8):
    """Approximate L over k-nearest-neighbor pairs; alpha stays exact."""
    from scipy.spatial import cKDTree

    tree = cKDTree(points)
    kk = min(k + 1, len(points))
    dist, idx = tree.query(points, k=kk)
    # column 0 is the point itself
    d = dist[:, 1:]
    dv = np.abs(values[:, None] - values[idx[:, 1:]])
    ok = d > 0
    l_best = float((dv[ok] / d[ok]).max()) if ok.any() else 0.0
    a_best = float(d[ok].min())
    return l_best, a_best


def lipschitz_lower_bound(sf):
    """Lower bound L on the Lipschitz constant of f_K and min spacing alpha.

    Exact over all pairs when the sample has at most 4096 nodes, otherwise
    computed over 8-nearest-neighbor pairs (alpha remains exact either way:
    the closest pair is always a nearest-neighbor pair).

    Returns
    -------
    LipschitzBound
        Named tuple (l, alpha).

    Raises
    ------
    SingleSample
        If the sample has one member node.
    """
    n = sf.mask.count
    if n < 2:
        raise SingleSample("need at least two sample nodes")
    pts = sf.mask.node_coords()
    vals = sf.values_on_k
    if n <= _EXACT_PAIR_CAP:
        l, a = _pairwise_lipschitz(pts, vals)
    else:
        l, a = _neighbor_lipschitz(pts, vals)
    return LipschitzBound(l, a)
