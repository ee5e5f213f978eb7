"""Sampled grid inputs matching each analytic prototype.

Each builder returns a PrototypeCase: the sampled function on its
reference grid, the lambda of the matching closed form, the keyword
parameters to forward to the analytic evaluators, the boolean mask of
nodes where the comparison is well posed (inside the hull of the snapped
sample set), and the data scale used in tolerances.

Sample points that do not land on lattice nodes (circles, shifted rays)
are snapped to the nearest node; with piecewise affine targets the
induced value error is bounded by slope * h/2, well inside the 10*h*scale
comparison budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ccx.grid import GridSpec, SampledFunction, SampleMask
from ccx.prototypes import PrototypeId

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PrototypeCase:
    pid: PrototypeId
    sample: SampledFunction
    lam: float
    params: dict
    eval_mask: np.ndarray
    scale: float


def _case(pid, spec, member, value_grid, lam, params, eval_mask, scale):
    sample = SampledFunction(SampleMask(spec, member), value_grid[member])
    return PrototypeCase(pid, sample, lam, params, eval_mask, scale)


def _square_spec(half, h):
    n = int(round(2.0 * half / h)) + 1
    return GridSpec(n, n, -half, -half, h)


def _snap(spec, xs, ys, member):
    """Mark the nearest node of each (x, y) in the member mask."""
    ii = np.rint((np.asarray(xs) - spec.x0) / spec.h).astype(int)
    jj = np.rint((np.asarray(ys) - spec.y0) / spec.h).astype(int)
    keep = (ii >= 0) & (ii < spec.nx) & (jj >= 0) & (jj < spec.ny)
    member[jj[keep], ii[keep]] = True


def four_point(h):
    """Corners (+-1, +-1) carrying -x*y; domain is the full square."""
    spec = _square_spec(1.0, h)
    x, y = spec.node_coords()
    member = (np.abs(np.abs(x) - 1.0) < h / 4) & (np.abs(np.abs(y) - 1.0) < h / 4)
    full = np.ones(spec.shape, dtype=bool)
    return _case(
        PrototypeId.FOUR_POINT, spec, member, -x * y, 3.0, {"lam": 3.0}, full, 1.0
    )


def eight_point(h):
    """Octagon vertices: +1 at (+-1, +-1), -1 at the snapped axis points."""
    nh = int(math.ceil(SQRT2 / h))
    half = nh * h
    n = 2 * nh + 1
    spec = GridSpec(n, n, -half, -half, h)
    x, y = spec.node_coords()
    a2 = round(SQRT2 / h) * h
    member = np.zeros(spec.shape, dtype=bool)
    _snap(spec, [1, 1, -1, -1], [1, -1, 1, -1], member)
    value = np.ones(spec.shape)
    axis = np.zeros(spec.shape, dtype=bool)
    _snap(spec, [a2, -a2, 0, 0], [0, 0, a2, -a2], axis)
    value[axis] = -1.0
    member |= axis
    c = SQRT2 - 1.0
    inside = (np.abs(x) + c * np.abs(y) <= SQRT2 - 2 * h) & (
        c * np.abs(x) + np.abs(y) <= SQRT2 - 2 * h
    )
    return _case(
        PrototypeId.EIGHT_POINT, spec, member, value, 3.0, {"lam": 3.0}, inside, 1.0
    )


def cross_parabolas(h):
    """Both diagonals of the square: -x^2 on y = x, +x^2 on y = -x."""
    spec = _square_spec(1.0, h)
    x, y = spec.node_coords()
    member = np.abs(np.abs(x) - np.abs(y)) < h / 4
    value = np.where(x * y >= 0, -x * x, x * x)
    full = np.ones(spec.shape, dtype=bool)
    return _case(
        PrototypeId.CROSS_PARABOLAS, spec, member, value, 2.0, {}, full, 1.0
    )


def cross_abs(h):
    """The two axes: |x| on the x-axis, -|y| on the y-axis; hull is a diamond."""
    spec = _square_spec(1.0, h)
    x, y = spec.node_coords()
    on_x = np.abs(y) < h / 4
    on_y = np.abs(x) < h / 4
    member = on_x | on_y
    value = np.where(on_x, np.abs(x), -np.abs(y))
    inside = np.abs(x) + np.abs(y) <= 1.0 - 2 * h
    return _case(
        PrototypeId.CROSS_ABS, spec, member, value, 20.0, {"lam": 20.0}, inside, 1.0
    )


def two_gables(h):
    """Left and right box edges carrying the gable profile 1 - |y|."""
    spec = _square_spec(1.0, h)
    x, y = spec.node_coords()
    member = np.abs(np.abs(x) - 1.0) < h / 4
    value = 1.0 - np.abs(y)
    full = np.ones(spec.shape, dtype=bool)
    return _case(
        PrototypeId.TWO_GABLES,
        spec,
        member,
        value,
        2.0,
        {"lam": 2.0, "r": 1.0, "h": 1.0},
        full,
        1.0,
    )


def jump_strip(h):
    """Boundary of [-1,1] x [-0.6,0.6] carrying sign(x)."""
    r, hd = 1.0, 0.6
    nx = int(round(2 * r / h)) + 1
    ny = int(round(2 * hd / h)) + 1
    spec = GridSpec(nx, ny, -r, -hd, h)
    x, y = spec.node_coords()
    member = (np.abs(np.abs(x) - r) < h / 4) | (np.abs(np.abs(y) - hd) < h / 4)
    value = np.sign(x)
    full = np.ones(spec.shape, dtype=bool)
    return _case(
        PrototypeId.JUMP_STRIP,
        spec,
        member,
        value,
        25.0,
        {"lam": 25.0, "r": r, "h": hd},
        full,
        1.0,
    )


def annulus_levels(h):
    """Two concentric circle contours: value m inside at radius r, 0 at R."""
    r, big_r, m, lam = 1.0, 2.0, 5.0, 5.0
    spec = _square_spec(big_r, h)
    x, y = spec.node_coords()
    member = np.zeros(spec.shape, dtype=bool)
    value = np.zeros(spec.shape)
    for radius, val in ((r, m), (big_r, 0.0)):
        steps = int(math.ceil(2 * math.pi * radius / (h / 2)))
        theta = np.linspace(0.0, 2 * math.pi, steps, endpoint=False)
        ring = np.zeros(spec.shape, dtype=bool)
        _snap(spec, radius * np.cos(theta), radius * np.sin(theta), ring)
        value[ring] = val
        member |= ring
    inside = np.hypot(x, y) <= big_r - 2 * h
    return _case(
        PrototypeId.ANNULUS_LEVELS,
        spec,
        member,
        value,
        lam,
        {"lam": lam, "r": r, "R": big_r, "m": m},
        inside,
        m,
    )


def wedge_levels(h):
    """V contour |y| = x at level 1 and its sqrt(2)-shifted copy at level 2."""
    a, lam, xmax = 1.0, 1.0, 3.0
    nx = int(round(xmax / h)) + 1
    ny = 2 * (nx - 1) + 1
    spec = GridSpec(nx, ny, 0.0, -xmax, h)
    x, y = spec.node_coords()
    member = np.abs(np.abs(y) - x) < h / 4
    value = np.ones(spec.shape)
    shift = math.sqrt(1.0 + a * a) / (a * math.sqrt(lam))
    tmax = xmax - shift
    ts = np.arange(0.0, tmax + h / 8, h / 4)
    outer = np.zeros(spec.shape, dtype=bool)
    for sgn in (1.0, -1.0):
        _snap(spec, shift + ts, sgn * a * ts, outer)
    value[outer] = 2.0
    member |= outer
    inside = (np.abs(y) <= a * x) & (x <= xmax - 2 * h)
    return _case(
        PrototypeId.WEDGE_LEVELS,
        spec,
        member,
        value,
        lam,
        {"lam": lam, "a": a},
        inside,
        2.0,
    )


BUILDERS = {
    PrototypeId.FOUR_POINT: four_point,
    PrototypeId.EIGHT_POINT: eight_point,
    PrototypeId.CROSS_PARABOLAS: cross_parabolas,
    PrototypeId.CROSS_ABS: cross_abs,
    PrototypeId.TWO_GABLES: two_gables,
    PrototypeId.JUMP_STRIP: jump_strip,
    PrototypeId.ANNULUS_LEVELS: annulus_levels,
    PrototypeId.WEDGE_LEVELS: wedge_levels,
}


def build_prototype_case(pid, h):
    """Sampled input and comparison metadata for one prototype id."""
    return BUILDERS[PrototypeId(pid)](h)
