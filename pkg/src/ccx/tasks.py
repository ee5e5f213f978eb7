"""Reference surfaces and end-to-end reconstruction pipelines.

Covers the four applications of the average approximation: level-set
(contour line) reconstruction, scattered-data interpolation, inpainting of
a damaged region, and salt & pepper restoration of 8-bit images. The three
reference surfaces on the unit square are a smooth two-peak/one-dip
exponential surface, a continuous piecewise-affine pyramid loaded from a
bundled triangulation, and a discontinuous piecewise-affine function whose
jump lines align with grid lines.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.spatial import cKDTree

from .envelope import EnvelopeReport, full_reach_stencil
from .errors import (
    AllDamaged,
    EmptyLevelSet,
    LambdaBelowThreshold,
    ParamOutOfRange,
)
from .grid import GridSpec, SampledFunction, SampleMask, ScalarField
from .metrics import psnr
from .transforms import AverageResult, TransformParams, average_approximation

__all__ = [
    "TestFunctionId",
    "franke",
    "cpa",
    "dpa",
    "cpa_triangulation",
    "evaluate_surface",
    "surface_field",
    "equispaced_levels",
    "NoiseSpec",
    "PaddingSpec",
    "LevelsetReport",
    "build_levelset_sample",
    "reconstruct_levelset",
    "build_scatter_sample",
    "inpaint",
    "corrupt_salt_pepper",
    "DenoiseResult",
    "denoise_salt_pepper",
]


class TestFunctionId(str, Enum):
    """Built-in reference surfaces on the unit square."""

    __test__ = False  # keep pytest from collecting the Test prefix

    FRANKE = "franke"
    CPA = "cpa"
    DPA = "dpa"


def franke(x, y):
    """Smooth scattered-data benchmark surface.

    Two exponential peaks and a sharper exponential dip superimposed on a
    surface sloping toward the first quadrant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t1 = 0.75 * np.exp(-((9 * x - 2) ** 2 + (9 * y - 2) ** 2) / 4)
    t2 = 0.75 * np.exp(-((9 * x + 1) ** 2) / 49 - (9 * y + 1) / 10)
    t3 = 0.5 * np.exp(-((9 * x - 7) ** 2 + (9 * y - 3) ** 2) / 4)
    t4 = -0.2 * np.exp(-((9 * x - 4) ** 2) - (9 * y - 7) ** 2)
    return t1 + t2 + t3 + t4


def dpa(x, y):
    """Discontinuous piecewise-affine surface with jumps on x=1/2 and y=1/2.

    Each quadrant of the unit square carries its own affine branch; the
    east/north boundaries x = 1/2 and y = 1/2 belong to the quadrant on
    their right/upper side.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    east = x >= 0.5
    north = y >= 0.5
    return np.select(
        [east & north, east & ~north, ~east & north],
        [x + y - 1.0, x - y - 0.5, -x + y - 0.5],
        default=-x - y,
    )


@lru_cache(maxsize=1)
def cpa_triangulation():
    """Bundled triangulation of the continuous piecewise-affine pyramid.

    Returns
    -------
    dict with keys
        nodes : (n, 2) float array
        values : (n,) float array
        triangles : (t, 3) int array, counterclockwise
        levels_6, levels_15 : non-equispaced contour level lists
    """
    raw = json.loads(
        resources.files("ccx").joinpath("data/cpa_triangulation.json").read_text()
    )
    return {
        "nodes": np.array(raw["nodes"], dtype=float),
        "values": np.array(raw["values"], dtype=float),
        "triangles": np.array(raw["triangles"], dtype=int),
        "levels_6": np.array(raw["levels_6"], dtype=float),
        "levels_15": np.array(raw["levels_15"], dtype=float),
    }


def cpa(x, y):
    """Continuous piecewise-affine pyramid, by barycentric interpolation."""
    tri = cpa_triangulation()
    nodes, vals, triangles = tri["nodes"], tri["values"], tri["triangles"]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    xb, yb = np.broadcast_arrays(xs, ys)
    shape = xb.shape
    px, py = xb.ravel(), yb.ravel()
    out = np.full(px.shape, np.nan)
    done = np.zeros(px.shape, dtype=bool)
    for t in triangles:
        (x1, y1), (x2, y2), (x3, y3) = nodes[t]
        det = (x1 - x3) * (y2 - y3) - (x2 - x3) * (y1 - y3)
        l1 = ((y2 - y3) * (px - x3) + (x3 - x2) * (py - y3)) / det
        l2 = ((y3 - y1) * (px - x3) + (x1 - x3) * (py - y3)) / det
        l3 = 1.0 - l1 - l2
        inside = (
            ~done & (l1 >= -1e-9) & (l2 >= -1e-9) & (l3 >= -1e-9)
        )
        out[inside] = (
            l1[inside] * vals[t[0]]
            + l2[inside] * vals[t[1]]
            + l3[inside] * vals[t[2]]
        )
        done |= inside
    if not done.all():
        raise ValueError("point outside the triangulated unit square")
    out = out.reshape(shape)
    if np.isscalar(x) and np.isscalar(y):
        return float(out.reshape(()))
    return out


_SURFACES = {
    TestFunctionId.FRANKE: franke,
    TestFunctionId.CPA: cpa,
    TestFunctionId.DPA: dpa,
}


def evaluate_surface(fid, x, y):
    """Evaluate a named reference surface at the given coordinates."""
    return _SURFACES[TestFunctionId(fid)](x, y)


def surface_field(fid, spec):
    """Sample a named reference surface on a grid."""
    x, y = spec.node_coords()
    return ScalarField(spec, np.asarray(evaluate_surface(fid, x, y), dtype=float))


def equispaced_levels(field, n):
    """n levels with spacing range/n, centered between min and max.

    The first and last level sit half a spacing inside the extremes, so no
    level degenerates to a single extremal point.
    """
    vals = field.values if isinstance(field, ScalarField) else np.asarray(field)
    lo, hi = float(vals.min()), float(vals.max())
    if not hi > lo:
        raise ValueError(f"field range is degenerate: [{lo}, {hi}]")
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def _as_surface(f, spec):
    if isinstance(f, ScalarField):
        if f.spec != spec:
            raise ValueError("field grid does not match the requested grid")
        return f
    return surface_field(f, spec)


def build_levelset_sample(f, levels, spec, value_mode="level"):
    """Sample a surface on the grid nodes nearest its contour lines.

    A node x joins K for level a when some axis neighbor y brackets the
    level, (f(x) - a)(f(y) - a) <= 0, and x is the closer of the pair,
    |f(x) - a| <= |f(y) - a|. A node claimed by several levels takes the
    nearest one (ties to the lower level).

    Parameters
    ----------
    f : TestFunctionId or ScalarField
    levels : array-like, strictly increasing
    spec : GridSpec
    value_mode : {"level", "function"}
        "level" assigns the exact level value a to each node (contour-line
        premise: samples lie on the level set). "function" keeps f at the
        node, which reproduces piecewise-affine surfaces exactly when their
        discontinuities align with grid lines.

    Returns
    -------
    SampledFunction

    Raises
    ------
    EmptyLevelSet
        If some level is never crossed on the grid.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or len(levels) == 0:
        raise ValueError("levels must be a nonempty 1D sequence")
    if len(levels) > 1 and not (np.diff(levels) > 0).all():
        raise ValueError("levels must be strictly increasing")
    if value_mode not in ("level", "function"):
        raise ValueError(f"unknown value_mode {value_mode!r}")
    field = _as_surface(f, spec)
    vals = field.values

    member = np.zeros(spec.shape, dtype=bool)
    best = np.full(spec.shape, np.inf)
    assigned = np.zeros(spec.shape)
    for a in levels:
        d = vals - a
        ad = np.abs(d)
        cross = np.zeros(spec.shape, dtype=bool)
        # horizontal neighbor pairs
        prod = d[:, :-1] * d[:, 1:] <= 0
        cross[:, :-1] |= prod & (ad[:, :-1] <= ad[:, 1:])
        cross[:, 1:] |= prod & (ad[:, 1:] <= ad[:, :-1])
        if spec.ny > 1:
            prod = d[:-1, :] * d[1:, :] <= 0
            cross[:-1, :] |= prod & (ad[:-1, :] <= ad[1:, :])
            cross[1:, :] |= prod & (ad[1:, :] <= ad[:-1, :])
        if not cross.any():
            raise EmptyLevelSet(f"level {a} is never crossed on the grid")
        member |= cross
        closer = cross & (ad < best)
        best[closer] = ad[closer]
        assigned[closer] = a

    source = assigned if value_mode == "level" else vals
    return SampledFunction(SampleMask(spec, member), source[member])


@dataclass(frozen=True)
class LevelsetReport:
    """Diagnostics of a level-set reconstruction run."""

    delta0: float
    lam_required: float
    warned: bool
    under_resolved: bool
    m_used: float
    lower_report: EnvelopeReport
    upper_report: EnvelopeReport


def _min_distinct_level_distance(sample):
    """Min distance between K nodes carrying different values (k-NN estimate)."""
    values = sample.values_on_k
    if len(np.unique(values)) < 2:
        return np.inf
    coords = sample.mask.node_coords()
    k = min(len(values), 128)
    tree = cKDTree(coords)
    dist, idx = tree.query(coords, k=k)
    differs = values[idx] != values[:, None]
    masked = np.where(differs, dist, np.inf)
    return float(masked.min())


def reconstruct_levelset(sample, p):
    """Average approximation of contour-line data, with threshold checks.

    delta0, the smallest distance between nodes of different levels, sets
    the scale threshold lam > (a_m - a_0) / delta0**2; a lambda at or below
    it triggers a LambdaBelowThreshold warning but the run proceeds.

    Returns
    -------
    (ScalarField, LevelsetReport)
    """
    values = sample.values_on_k
    delta0 = _min_distinct_level_distance(sample)
    span = float(values.max() - values.min())
    lam_required = 0.0 if np.isinf(delta0) else span / delta0**2
    warned = p.lam <= lam_required
    if warned:
        warnings.warn(
            f"lambda {p.lam} at or below level-separation threshold "
            f"{lam_required:.6g}; reconstruction may smear levels",
            LambdaBelowThreshold,
        )
    under_resolved = delta0 < 2.0 * sample.spec.h
    result = average_approximation(sample, p)
    report = LevelsetReport(
        delta0=delta0,
        lam_required=lam_required,
        warned=warned,
        under_resolved=under_resolved,
        m_used=result.m_used,
        lower_report=result.lower_report,
        upper_report=result.upper_report,
    )
    return result.field, report


def build_scatter_sample(f, density, seed, spec):
    """Random node subset of exact size round(density * n) with surface values.

    Parameters
    ----------
    f : TestFunctionId or ScalarField
    density : float in (0, 1]
    seed : int
        Feeds numpy's default generator; same seed, same mask.
    spec : GridSpec
    """
    if not 0.0 < density <= 1.0:
        raise ParamOutOfRange(f"density must be in (0, 1], got {density}")
    n = spec.n_nodes
    size = int(round(density * n))
    if size == 0:
        raise ParamOutOfRange(f"density {density} selects zero of {n} nodes")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=size, replace=False)
    member = np.zeros(spec.n_nodes, dtype=bool)
    member[chosen] = True
    member = member.reshape(spec.shape)
    field = _as_surface(f, spec)
    return SampledFunction(SampleMask(spec, member), field.values[member])


def inpaint(image, damage_mask, p):
    """Reconstruct damaged pixels from the undamaged rest of the image.

    Undamaged pixels pass through bit-exactly; only the damage region takes
    transform values.

    Returns
    -------
    (ScalarField, AverageResult or None)
        The report is None when the damage mask is empty (identity).

    Raises
    ------
    AllDamaged
        If no undamaged pixel remains.
    """
    if image.spec != damage_mask.spec:
        raise ValueError("damage mask grid does not match the image grid")
    damaged = damage_mask.member
    if not damaged.any():
        return image, None
    intact = ~damaged
    if not intact.any():
        raise AllDamaged("every pixel is damaged; nothing to interpolate from")
    sf = SampledFunction(SampleMask(image.spec, intact), image.values[intact])
    result = average_approximation(sf, p)
    merged = np.where(damaged, result.field.values, image.values)
    return ScalarField(image.spec, merged), result


@dataclass(frozen=True)
class NoiseSpec:
    """Salt & pepper corruption: density, RNG seed, noise kind."""

    density: float
    seed: int
    kind: str = "salt_pepper"

    def __post_init__(self):
        if not 0.0 < self.density <= 1.0:
            raise ParamOutOfRange(
                f"noise density must be in (0, 1], got {self.density}"
            )
        if self.kind != "salt_pepper":
            raise ParamOutOfRange(f"unsupported noise kind {self.kind!r}")


@dataclass(frozen=True)
class PaddingSpec:
    """Mirror padding width (pixels) applied before the transform."""

    width: int = 0
    mode: str = "mirror"

    def __post_init__(self):
        if self.width < 0:
            raise ParamOutOfRange(f"padding width must be >= 0, got {self.width}")
        if self.mode != "mirror":
            raise ParamOutOfRange(f"unsupported padding mode {self.mode!r}")


def corrupt_salt_pepper(image, noise):
    """Corrupt round(density * npixels) pixels, alternately to 0 and 255.

    Corruption is mask-tracked: the returned mask marks the uncorrupted
    pixels, so true-black or true-white originals that were not hit stay
    in the sample set.

    Returns
    -------
    (corrupted: ScalarField, intact: SampleMask)
    """
    n = image.spec.n_nodes
    count = int(round(noise.density * n))
    rng = np.random.default_rng(noise.seed)
    hit = rng.choice(n, size=count, replace=False)
    flat = image.values.copy().ravel()
    flat[hit[0::2]] = 0.0
    flat[hit[1::2]] = 255.0
    member = np.ones(n, dtype=bool)
    member[hit] = False
    if not member.any():
        raise AllDamaged("noise density corrupts every pixel")
    corrupted = ScalarField(image.spec, flat.reshape(image.spec.shape))
    return corrupted, SampleMask(image.spec, member.reshape(image.spec.shape))


@dataclass(frozen=True)
class DenoiseResult:
    """Salt & pepper restoration output with its quality figures."""

    restored: ScalarField
    psnr_db: float
    corrupted: ScalarField
    avg: AverageResult


def denoise_salt_pepper(image, noise, pad, p):
    """Two-stage salt & pepper restoration: corrupt bookkeeping + transform.

    The corrupted image and its intact-pixel mask are mirror-padded, the
    average approximation is run on the enlarged image, and the result is
    cropped back and clamped to [0, 255].

    Parameters
    ----------
    image : ScalarField
        8-bit range values on a pixel grid (h = 1 recommended).
    noise : NoiseSpec
    pad : PaddingSpec
    p : TransformParams

    Returns
    -------
    DenoiseResult
        restored field, PSNR vs the original (inf sentinel when exact),
        the corrupted image, and the transform report.
    """
    corrupted, intact = corrupt_salt_pepper(image, noise)
    w = pad.width
    spec = image.spec
    vals = np.pad(corrupted.values, w, mode="symmetric")
    member = np.pad(intact.member, w, mode="symmetric")
    pspec = GridSpec(
        spec.nx + 2 * w,
        spec.ny + 2 * w,
        spec.x0 - w * spec.h,
        spec.y0 - w * spec.h,
        spec.h,
    )
    sf = SampledFunction(SampleMask(pspec, member), vals[member])
    run = p
    if p.stencil.radius >= max(spec.nx, spec.ny):
        # a full-reach stencil sized for the image grid must stay full
        # reach on the padded grid, or the solver falls off the hull route
        run = replace(p, stencil=full_reach_stencil(pspec))
    result = average_approximation(sf, run)
    core = result.field.values[w : w + spec.ny, w : w + spec.nx]
    restored = ScalarField(spec, np.clip(core, 0.0, 255.0))
    return DenoiseResult(
        restored=restored,
        psnr_db=psnr(image, restored),
        corrupted=corrupted,
        avg=result,
    )
