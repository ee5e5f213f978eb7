"""Closed-form oracles for the worked prototype configurations.

Each prototype fixes a sample set K with data f_K and exposes the exact
average approximation (and, where known, the individual lower/upper
transforms) as branch formulas. They are the ground truth the grid pipeline
is tested against.

Geometry of the configurations:

* sign_jump_1d: f(x) = sign(x) on the line; transforms of f itself.
* four_point: K = corners of the square [-1,1]^2, values -1 at (1,1) and
  (-1,-1), +1 at the other two; one cocircular Delaunay cell.
* eight_point: K = 8 points at radius sqrt(2), angles k*pi/4; the four
  axis points carry -1, the four diagonal corners (+-1, +-1) carry +1.
* cross_parabolas: K = the diagonals y = +-x with f = -xy there (i.e.
  x^2 on y = -x and -x^2 on y = x).
* cross_abs: K = the coordinate axes, f = |x| on the x-axis and -|y| on
  the y-axis.
* two_gables: K = two vertical segments x = +-r, |y| <= h with f = 1 - |y|.
* roof_box: K = the full box boundary, f = h - |y| on the vertical sides
  and 0 on the horizontal sides; closed form only in the tall regime h > r.
* jump_strip: K = the full boundary of [-r,r] x [-h,h] (h < r) with
  f = sign(x); the average is the 1D sign profile, constant in y.
* annulus_levels: K = two concentric circles, value m on the inner radius
  r and 0 on the outer radius R.
* wedge_levels: K = two V-shaped level lines |y| = a*x and
  |y| = a*(x - c2) inside the wedge |y| <= a*x, values 1 and 2; branch
  slopes scale with sqrt(lambda), handled by the exact rescaling
  A_lam(x) = A_1(sqrt(lam) * x).
* fan_jump: f = +m on the ray y = -alpha*x, -m on y = +alpha*x (x >= 0);
  the average is known only as a parametric graph over (s_l, s_u).
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .errors import NotAvailable, OutOfDomain, ParamOutOfRange, RegimeUnsupported

__all__ = [
    "PrototypeId",
    "analytic_average",
    "analytic_lower",
    "analytic_upper",
    "fan_jump_graph",
    "default_params",
]

_SQRT2 = math.sqrt(2.0)
_DOMAIN_TOL = 1e-9


class PrototypeId(str, Enum):
    SIGN_JUMP_1D = "sign_jump_1d"
    FOUR_POINT = "four_point"
    EIGHT_POINT = "eight_point"
    CROSS_PARABOLAS = "cross_parabolas"
    CROSS_ABS = "cross_abs"
    TWO_GABLES = "two_gables"
    ROOF_BOX = "roof_box"
    JUMP_STRIP = "jump_strip"
    ANNULUS_LEVELS = "annulus_levels"
    WEDGE_LEVELS = "wedge_levels"
    FAN_JUMP = "fan_jump"


_DEFAULTS = {
    PrototypeId.SIGN_JUMP_1D: {"lam": 100.0},
    PrototypeId.FOUR_POINT: {"lam": 3.0},
    PrototypeId.EIGHT_POINT: {"lam": 3.0},
    PrototypeId.CROSS_PARABOLAS: {},
    PrototypeId.CROSS_ABS: {"lam": 20.0},
    PrototypeId.TWO_GABLES: {"lam": 2.0, "r": 1.0, "h": 1.0},
    PrototypeId.ROOF_BOX: {"lam": 10.0, "r": 0.5, "h": 1.0},
    PrototypeId.JUMP_STRIP: {"lam": 25.0, "r": 1.0, "h": 0.6},
    PrototypeId.ANNULUS_LEVELS: {"lam": 5.0, "r": 1.0, "R": 2.0, "m": 5.0},
    PrototypeId.WEDGE_LEVELS: {"lam": 1.0, "a": 1.0},
    PrototypeId.FAN_JUMP: {"lam": 10.0, "alpha": 1.0, "m": 1.0},
}


def default_params(pid):
    """Copy of the default parameter set of a prototype."""
    return dict(_DEFAULTS[PrototypeId(pid)])


def _positive(name, value):
    v = float(value)
    if not (np.isfinite(v) and v > 0):
        raise ParamOutOfRange(f"{name} must be finite and > 0, got {value}")
    return v


def _merge_params(pid, params):
    merged = dict(_DEFAULTS[pid])
    unknown = set(params) - set(merged)
    if unknown:
        raise ParamOutOfRange(
            f"{pid.value} does not take parameters {sorted(unknown)}"
        )
    merged.update(params)
    return merged


def _prepare(x, y):
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    xb, yb = np.broadcast_arrays(xa, ya)
    scalar = xb.ndim == 0
    return np.atleast_1d(xb), np.atleast_1d(yb), scalar


def _finish(out, scalar):
    return float(out[0]) if scalar else out


def _require_in(ok, what):
    if not np.all(ok):
        raise OutOfDomain(f"evaluation point outside the {what} domain")


# ---------------------------------------------------------------------------
# sign_jump_1d


def _sign_pieces(x, lam):
    t = math.sqrt(2.0 / lam)
    lower = np.select(
        [x <= 0, x <= t], [-1.0, 1.0 - lam * (x - t) ** 2], default=1.0
    )
    upper = np.select(
        [x <= -t, x <= 0], [-1.0, lam * (x + t) ** 2 - 1.0], default=1.0
    )
    avg = np.select(
        [x <= -t, x <= 0, x <= t],
        [-1.0, 0.5 * lam * (x + t) ** 2 - 1.0, 1.0 - 0.5 * lam * (x - t) ** 2],
        default=1.0,
    )
    return lower, upper, avg


# ---------------------------------------------------------------------------
# four_point


def _four_point_in(x, y):
    return (np.abs(x) <= 1 + _DOMAIN_TOL) & (np.abs(y) <= 1 + _DOMAIN_TOL)


def _four_point(x, y, lam):
    rho2 = x * x + y * y
    p_minus = np.abs(x - y) - 1.0
    p_plus = 1.0 - np.abs(x + y)
    lower = 2.0 * lam - lam * rho2 + p_minus
    upper = lam * rho2 - 2.0 * lam + p_plus
    avg = 0.5 * (np.abs(x - y) - np.abs(x + y))
    return lower, upper, avg


# ---------------------------------------------------------------------------
# eight_point


def _eight_point_in(x, y):
    c = _SQRT2 - 1.0
    tol = _DOMAIN_TOL * 4
    return (np.abs(x) + c * np.abs(y) <= _SQRT2 + tol) & (
        c * np.abs(x) + np.abs(y) <= _SQRT2 + tol
    )


def _eight_point(x, y, lam):
    c = _SQRT2 - 1.0
    rho2 = x * x + y * y
    p_plus = np.minimum(
        1.0,
        np.minimum(
            (_SQRT2 + 1.0 - 2.0 * np.abs(x)) / c,
            (_SQRT2 + 1.0 - 2.0 * np.abs(y)) / c,
        ),
    )
    p_minus = np.maximum(
        -1.0,
        np.maximum(
            (_SQRT2 * np.abs(x + y) - _SQRT2 - 1.0) / c,
            (_SQRT2 * np.abs(x - y) - _SQRT2 - 1.0) / c,
        ),
    )
    lower = 2.0 * lam - lam * rho2 + p_minus
    upper = lam * rho2 - 2.0 * lam + p_plus
    avg = 0.5 * (p_plus + p_minus)
    return lower, upper, avg


# ---------------------------------------------------------------------------
# cross_parabolas / cross_abs (global domains)


def _cross_parabolas(x, y):
    half_gap = 0.5 * np.abs(x * x - y * y)
    avg = -x * y
    return avg + half_gap, avg - half_gap, avg


def _cross_abs(x, y, lam):
    ax = np.abs(x)
    ay = np.abs(y)
    near = ax + ay <= 1.0 / (2.0 * lam)
    rho2 = x * x + y * y
    lower = np.where(
        near,
        2.0 * ax - 1.0 / (4.0 * lam) - lam * rho2,
        ax + 2.0 * lam * ax * ay - ay,
    )
    upper = np.where(
        near,
        -2.0 * ay + 1.0 / (4.0 * lam) + lam * rho2,
        ax - 2.0 * lam * ax * ay - ay,
    )
    return lower, upper, ax - ay


# ---------------------------------------------------------------------------
# two_gables / roof_box / jump_strip (box domains)


def _box_in(x, y, r, h):
    return (np.abs(x) <= r + _DOMAIN_TOL) & (np.abs(y) <= h + _DOMAIN_TOL)


def _two_gables(x, y, lam, r, h):
    yc = 1.0 / (2.0 * lam)
    near = np.abs(y) <= yc
    lower = np.where(
        near,
        1.0 - 1.0 / (4.0 * lam) + lam * (r * r - x * x - y * y),
        1.0 + lam * (r * r - x * x) - np.abs(y),
    )
    upper = 1.0 - lam * (r * r - x * x) - np.abs(y)
    avg = np.where(
        near,
        1.0 - 1.0 / (8.0 * lam) - 0.5 * lam * y * y - 0.5 * np.abs(y),
        1.0 - np.abs(y),
    )
    return lower, upper, avg


def _roof_box_avg(y, lam, h):
    near = np.abs(y) <= 1.0 / (2.0 * lam)
    return np.where(
        near, h - 1.0 / (4.0 * lam) - lam * y * y, h - np.abs(y)
    )


# ---------------------------------------------------------------------------
# annulus_levels


def _annulus(x, y, lam, r, R, m):
    rho = np.hypot(x, y)
    inner = rho <= r
    frac = (R - rho) / (R - r)
    lower = np.where(
        inner,
        m + lam * (r * r - rho * rho),
        lam * (R * R - rho * rho) - (lam * (R * R - r * r) - m) * frac,
    )
    upper = np.where(
        inner,
        m + lam * (rho * rho - r * r),
        lam * (rho * rho - R * R) + (m + lam * (R * R - r * r)) * frac,
    )
    avg = np.where(inner, m, m * frac)
    return lower, upper, avg


# ---------------------------------------------------------------------------
# wedge_levels


def _wedge_avg(x, y, lam, a):
    # Rescaling (x, y) -> sqrt(lam)*(x, y) maps the problem to the lam = 1
    # frame without changing the level values 1 and 2.
    s = math.sqrt(lam)
    X = s * x
    Y = np.abs(s * y)
    rt = math.sqrt(1.0 + a * a)
    # Ray-adapted frame of the nearest inner-V ray: p runs along the ray,
    # d is the normal distance into the sector; the outer V sits at d = 1
    # with its vertex at (p, d) = (1/a, 1).
    p = (X + a * Y) / rt
    d = (a * X - Y) / rt
    # bh is half the slope beta* of the plane supported on both inner rays
    # and the outer vertex; it is the root that makes the apex-exit zones
    # meet continuously.
    bh = (1.0 + a * a) / a - math.sqrt(2.0 + a * a)
    x_u = bh / rt  # end of the exact value-1 plateau on the bisector scale
    x1 = 1.0 / (a * rt)  # end of the inner-pair zone of the lower envelope
    d_line = (p - bh) / (1.0 / a - bh)
    one_minus_d = np.maximum(1.0 - d, 1e-300)
    # upper-envelope branch pinned at the outer vertex, tangent to one ray
    cu3 = (
        p * p
        + d * d
        + (1.0 - d)
        + d * (2.0 - rt * rt / (a * a))
        - (p - d / a) ** 2 / one_minus_d
    )
    cl1 = 1.0 + (a * X) ** 2 - Y * Y
    cl2 = 2.0 * rt * X / a + 1.0 - 1.0 / (a * a) - p * p - d * d
    bend = 1.0 + 0.5 * (rt * X - bh) ** 2
    fan = rt * X * (1.0 / a - bh) + 1.0 + 0.5 * (bh * bh - 1.0 / (a * a))
    return np.select(
        [
            d >= 1.0,
            p >= 1.0 / a,
            X <= x_u,
            (X <= x1) & (d >= d_line),
            d >= d_line,
            X <= x1,
        ],
        [
            2.0,
            1.0 + d,
            1.0,
            bend,
            fan,
            0.5 * (cl1 + cu3),
        ],
        default=0.5 * (cl2 + cu3),
    )


def _wedge_in(x, y, a):
    return (x >= -_DOMAIN_TOL) & (np.abs(y) <= a * x + _DOMAIN_TOL * (1 + a))


# ---------------------------------------------------------------------------
# dispatch


def _evaluate(pid, x, y, params, check_domain):
    pid = PrototypeId(pid)
    p = _merge_params(pid, params)
    xs, ys, scalar = _prepare(x, y)

    if pid is PrototypeId.SIGN_JUMP_1D:
        lam = _positive("lam", p["lam"])
        res = _sign_pieces(xs, lam)
    elif pid is PrototypeId.FOUR_POINT:
        lam = _positive("lam", p["lam"])
        if check_domain:
            _require_in(_four_point_in(xs, ys), "four_point square")
        res = _four_point(xs, ys, lam)
    elif pid is PrototypeId.EIGHT_POINT:
        lam = _positive("lam", p["lam"])
        if check_domain:
            _require_in(_eight_point_in(xs, ys), "eight_point octagon")
        res = _eight_point(xs, ys, lam)
    elif pid is PrototypeId.CROSS_PARABOLAS:
        res = _cross_parabolas(xs, ys)
    elif pid is PrototypeId.CROSS_ABS:
        lam = _positive("lam", p["lam"])
        res = _cross_abs(xs, ys, lam)
    elif pid is PrototypeId.TWO_GABLES:
        lam = _positive("lam", p["lam"])
        r = _positive("r", p["r"])
        h = _positive("h", p["h"])
        if not lam > 1.0 / (2.0 * h):
            raise ParamOutOfRange(
                f"two_gables needs lam > 1/(2h) = {1.0 / (2.0 * h)}, got {lam}"
            )
        if check_domain:
            _require_in(_box_in(xs, ys, r, h), "two_gables box")
        res = _two_gables(xs, ys, lam, r, h)
    elif pid is PrototypeId.ROOF_BOX:
        lam = _positive("lam", p["lam"])
        r = _positive("r", p["r"])
        h = _positive("h", p["h"])
        if h <= r:
            raise RegimeUnsupported(
                f"roof_box closed form needs h > r, got h={h}, r={r}"
            )
        if not lam > 1.0 / (2.0 * h):
            raise ParamOutOfRange(
                f"roof_box needs lam > 1/(2h) = {1.0 / (2.0 * h)}, got {lam}"
            )
        if check_domain:
            _require_in(_box_in(xs, ys, r, h), "roof_box box")
        res = (None, None, _roof_box_avg(ys, lam, h))
    elif pid is PrototypeId.JUMP_STRIP:
        lam = _positive("lam", p["lam"])
        r = _positive("r", p["r"])
        h = _positive("h", p["h"])
        if h >= r:
            raise RegimeUnsupported(
                f"jump_strip closed form needs h < r, got h={h}, r={r}"
            )
        if math.sqrt(2.0 / lam) > r:
            raise ParamOutOfRange(
                f"jump_strip needs sqrt(2/lam) <= r; lam={lam} is too small"
            )
        if check_domain:
            _require_in(_box_in(xs, ys, r, h), "jump_strip box")
        res = (None, None, _sign_pieces(xs, lam)[2])
    elif pid is PrototypeId.ANNULUS_LEVELS:
        lam = _positive("lam", p["lam"])
        r = _positive("r", p["r"])
        R = _positive("R", p["R"])
        m = _positive("m", p["m"])
        if not R > r:
            raise ParamOutOfRange(f"annulus needs R > r, got r={r}, R={R}")
        if not lam > m / (R * R - r * r):
            raise ParamOutOfRange(
                f"annulus needs lam > m/(R^2-r^2) = {m / (R * R - r * r)}"
            )
        if check_domain:
            _require_in(
                np.hypot(xs, ys) <= R + _DOMAIN_TOL, "annulus disk"
            )
        res = _annulus(xs, ys, lam, r, R, m)
    elif pid is PrototypeId.WEDGE_LEVELS:
        lam = _positive("lam", p["lam"])
        a = _positive("a", p["a"])
        if check_domain:
            _require_in(_wedge_in(xs, ys, a), "wedge")
        res = (None, None, _wedge_avg(xs, ys, lam, a))
    elif pid is PrototypeId.FAN_JUMP:
        raise NotAvailable(
            "fan_jump has no pointwise closed form; use fan_jump_graph"
        )
    else:  # pragma: no cover
        raise ValueError(f"unhandled prototype {pid}")

    lower, upper, avg = res
    return lower, upper, avg, scalar


def analytic_average(pid, x, y, check_domain=True, **params):
    """Closed-form average approximation of a prototype at (x, y).

    Accepts scalars or arrays; broadcasts x against y. With
    check_domain=False the branch formulas are evaluated outside the stated
    domain as plain algebra (useful for plotting), where they are no longer
    oracle values.
    """
    _, _, avg, scalar = _evaluate(pid, x, y, params, check_domain)
    return _finish(avg, scalar)


def analytic_lower(pid, x, y, check_domain=True, **params):
    """Closed-form lower transform where the prototype has one.

    Raises
    ------
    NotAvailable
        For prototypes with only an average closed form (roof_box,
        jump_strip, wedge_levels, fan_jump).
    """
    lower, _, _, scalar = _evaluate(pid, x, y, params, check_domain)
    if lower is None:
        raise NotAvailable(
            f"{PrototypeId(pid).value} has no lower-transform closed form"
        )
    return _finish(lower, scalar)


def analytic_upper(pid, x, y, check_domain=True, **params):
    """Closed-form upper transform where the prototype has one."""
    _, upper, _, scalar = _evaluate(pid, x, y, params, check_domain)
    if upper is None:
        raise NotAvailable(
            f"{PrototypeId(pid).value} has no upper-transform closed form"
        )
    return _finish(upper, scalar)


def fan_jump_graph(alpha, m, lam, s_l, s_u):
    """Parametric graph point of the fan-jump average approximation.

    The two rays y = -+ alpha*x (x >= 0) carry data +-m. The average in the
    fan between them is known parametrically: for ray offsets
    (s_l, s_u) with |s_u^2 - s_l^2| <= c = 2m/lam, the graph point is
    (x, y, value) with the mixing weights

        t_l = B(A - s_u) / (A*B - s_l*s_u),
        t_u = s_l(A - s_u) / (A*B - s_l*s_u),
        A = sqrt(s_l^2 + c), B = sqrt(s_u^2 + c).

    Returns
    -------
    (x, y, value) : floats (or arrays when s_l/s_u are arrays)

    Raises
    ------
    ParamOutOfRange
        Outside s_l, s_u >= 0 or |s_u^2 - s_l^2| <= c.
    """
    alpha = _positive("alpha", alpha)
    m = _positive("m", m)
    lam = _positive("lam", lam)
    sl = np.asarray(s_l, dtype=float)
    su = np.asarray(s_u, dtype=float)
    scalar = sl.ndim == 0 and su.ndim == 0
    sl, su = np.atleast_1d(*np.broadcast_arrays(sl, su))
    c = 2.0 * m / lam
    if (sl < 0).any() or (su < 0).any():
        raise ParamOutOfRange("s_l and s_u must be >= 0")
    if (np.abs(su * su - sl * sl) > c * (1 + 1e-12) + 1e-15).any():
        raise ParamOutOfRange(f"|s_u^2 - s_l^2| must be <= 2m/lam = {c}")
    a = np.sqrt(sl * sl + c)
    b = np.sqrt(su * su + c)
    denom = a * b - sl * su  # >= c/ (bounded below), never 0 for c > 0
    t_l = b * (a - su) / denom
    t_u = sl * (a - su) / denom
    rt = math.sqrt(1.0 + alpha * alpha)
    x = ((1.0 - t_l) * a + t_l * sl) / rt
    y = alpha * (t_l * sl - (1.0 - t_l) * a) / rt
    value = 0.5 * lam * (sl * sl - su * su) + lam * c * (1.0 - t_l - t_u)
    if scalar:
        return float(x[0]), float(y[0]), float(value[0])
    return x, y, value
