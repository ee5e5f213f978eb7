"""Sweep kernels for the envelope solver.

Two interchangeable backends compute the same monotone fixed point (the
largest grid function below the input that is midpoint-convex along every
stencil direction):

* ``gauss_seidel``: in-place forward+backward sweeps, compiled with numba.
  This is the default and the deterministic reference.
* ``jacobi``: a vectorized pure-numpy iteration used when numba is missing
  or when ``CCX_BACKEND=numpy`` is set. Same fixed point, more iterations.

Combination arithmetic uses weighted differences from one endpoint rather
than raw weighted sums so that sentinel-sized values (M ~ 1e13) lose no
precision.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via CCX_BACKEND=numpy
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


__all__ = [
    "HAS_NUMBA",
    "resolve_backend",
    "gs_sweep",
    "jacobi_sweep",
    "hull_sweep",
    "hull_sweep_numpy",
]


def resolve_backend(name=None):
    """Map a backend request to {"numba", "numpy"}.

    ``name=None`` reads the CCX_BACKEND environment variable; "auto" (or an
    unset variable) picks numba when available.
    """
    req = (name or os.environ.get("CCX_BACKEND", "auto")).strip().lower()
    if req in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if req == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("CCX_BACKEND=numba but numba is not importable")
        return "numba"
    if req == "numpy":
        return "numpy"
    raise ValueError(f"unknown backend {req!r}")


@njit(cache=True, nogil=True)
def _gs_pass(g, f, dirs, smax, forward):  # pragma: no cover - compiled
    ny, nx = g.shape
    nd = dirs.shape[0]
    acc = 0.0
    if forward:
        j0, j1, dj = 0, ny, 1
        i0, i1, di = 0, nx, 1
    else:
        j0, j1, dj = ny - 1, -1, -1
        i0, i1, di = nx - 1, -1, -1
    for j in range(j0, j1, dj):
        for i in range(i0, i1, di):
            best = f[j, i]
            for d in range(nd):
                rx = dirs[d, 0]
                ry = dirs[d, 1]
                for t1 in range(1, smax + 1):
                    ip = i + t1 * rx
                    jp = j + t1 * ry
                    if ip < 0 or ip >= nx or jp < 0 or jp >= ny:
                        break  # larger t1 stays out of domain
                    gp = g[jp, ip]
                    for t2 in range(1, smax + 1):
                        im = i - t2 * rx
                        jm = j - t2 * ry
                        if im < 0 or im >= nx or jm < 0 or jm >= ny:
                            break
                        gm = g[jm, im]
                        # convex combination hitting (i, j): weight on the
                        # +t1 endpoint is t2/(t1+t2)
                        comb = gm + (gp - gm) * (t2 / (t1 + t2))
                        if comb < best:
                            best = comb
            delta = g[j, i] - best
            g[j, i] = best
            acc += delta * delta
    return acc


def gs_sweep(g, f, dirs, smax):
    """One forward+backward Gauss-Seidel sweep in place.

    Returns the squared L2 norm of the change over both passes.
    """
    acc = _gs_pass(g, f, dirs, smax, True)
    acc += _gs_pass(g, f, dirs, smax, False)
    return acc


@njit(cache=True, nogil=True)
def _hull_pass(g, f, dirs, forward):  # pragma: no cover - compiled
    """One pass of per-line lower convex hull updates, one direction at a time.

    Valid when every pair multiple is admissible (stencil reach covers the
    grid): the min over all straddling pair combinations along a line equals
    the lower convex hull of the current values on that line.
    """
    ny, nx = g.shape
    maxlen = nx if nx > ny else ny
    idx_i = np.empty(maxlen, np.int64)
    idx_j = np.empty(maxlen, np.int64)
    vals = np.empty(maxlen, np.float64)
    hk = np.empty(maxlen, np.int64)
    hv = np.empty(maxlen, np.float64)
    nd = dirs.shape[0]
    for dd in range(nd):
        d = dd if forward else nd - 1 - dd
        rx = dirs[d, 0]
        ry = dirs[d, 1]
        for j0 in range(ny):
            jj = j0 if forward else ny - 1 - j0
            for i0 in range(nx):
                ii = i0 if forward else nx - 1 - i0
                ip = ii - rx
                jp = jj - ry
                if 0 <= ip < nx and 0 <= jp < ny:
                    continue  # not a line start
                n = 0
                i = ii
                j = jj
                while 0 <= i < nx and 0 <= j < ny:
                    idx_i[n] = i
                    idx_j[n] = j
                    vals[n] = g[j, i]
                    n += 1
                    i += rx
                    j += ry
                if n < 3:
                    continue  # no node strictly between a pair
                m = 0
                for k in range(n):
                    v = vals[k]
                    while m >= 2:
                        k1 = hk[m - 2]
                        v1 = hv[m - 2]
                        # pop the top vertex when it lies on or above the
                        # chord from the vertex below it to (k, v)
                        if (hv[m - 1] - v1) * (k - k1) >= (v - v1) * (
                            hk[m - 1] - k1
                        ):
                            m -= 1
                        else:
                            break
                    hk[m] = k
                    hv[m] = v
                    m += 1
                for seg in range(m - 1):
                    ka = hk[seg]
                    va = hv[seg]
                    kb = hk[seg + 1]
                    vb = hv[seg + 1]
                    span = kb - ka
                    for k in range(ka + 1, kb):
                        w = (k - ka) / span
                        g[idx_j[k], idx_i[k]] = va + (vb - va) * w
    return 0.0


def hull_sweep(g, f, dirs, smax):
    """One forward+backward full-reach sweep (per-line hulls), in place."""
    _hull_pass(g, f, dirs, True)
    _hull_pass(g, f, dirs, False)
    return 0.0


def _hull_line(vals):
    """Lower convex hull values of (k, vals[k]), uniform spacing."""
    n = len(vals)
    hk = []
    hv = []
    for k in range(n):
        v = vals[k]
        while len(hk) >= 2 and (hv[-1] - hv[-2]) * (k - hk[-2]) >= (
            v - hv[-2]
        ) * (hk[-1] - hk[-2]):
            hk.pop()
            hv.pop()
        hk.append(k)
        hv.append(v)
    out = vals.copy()
    for seg in range(len(hk) - 1):
        ka, kb = hk[seg], hk[seg + 1]
        va, vb = hv[seg], hv[seg + 1]
        ks = np.arange(ka + 1, kb)
        if len(ks):
            out[ks] = va + (vb - va) * ((ks - ka) / (kb - ka))
    return out


def _hull_dir_numpy(g, rx, ry):
    """Hull-update every grid line of one direction (lines are disjoint)."""
    ny, nx = g.shape
    for j in range(ny):
        for i in range(nx):
            ip, jp = i - rx, j - ry
            if 0 <= ip < nx and 0 <= jp < ny:
                continue  # not a line start
            ii, jj = [], []
            ci, cj = i, j
            while 0 <= ci < nx and 0 <= cj < ny:
                ii.append(ci)
                jj.append(cj)
                ci += rx
                cj += ry
            if len(ii) < 3:
                continue
            sel = (np.array(jj), np.array(ii))
            g[sel] = _hull_line(g[sel])


def hull_sweep_numpy(g, f, dirs, smax):
    """Pure-numpy full-reach sweep: same per-line hull updates as hull_sweep.

    Forward pass visits directions in list order, backward pass reversed;
    within one direction the lines are disjoint, so their order is moot.
    """
    for rx, ry in dirs:
        _hull_dir_numpy(g, rx, ry)
    for rx, ry in reversed(dirs):
        _hull_dir_numpy(g, rx, ry)
    return 0.0


def _shifted(g, dx, dy):
    """g translated by (dx, dy) in index space, +inf outside the domain."""
    ny, nx = g.shape
    out = np.full((ny, nx), np.inf)
    y0, y1 = max(0, -dy), min(ny, ny - dy)
    x0, x1 = max(0, -dx), min(nx, nx - dx)
    if y0 < y1 and x0 < x1:
        out[y0:y1, x0:x1] = g[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
    return out


def jacobi_sweep(g, f, dirs, smax):
    """One synchronous Jacobi update of the same fixed-point map.

    Writes the new iterate into g and returns the squared L2 change.
    """
    best = f.copy()
    plus = {}
    minus = {}
    for rx, ry in dirs:
        for t in range(1, smax + 1):
            plus[(rx, ry, t)] = _shifted(g, t * rx, t * ry)
            minus[(rx, ry, t)] = _shifted(g, -t * rx, -t * ry)
    # inf padding marks out-of-domain neighbors; the masked lanes still see
    # inf - inf = nan inside np.where's eager arithmetic, hence the errstate
    with np.errstate(invalid="ignore"):
        for rx, ry in dirs:
            for t1 in range(1, smax + 1):
                gp = plus[(rx, ry, t1)]
                for t2 in range(1, smax + 1):
                    gm = minus[(rx, ry, t2)]
                    ok = np.isfinite(gp) & np.isfinite(gm)
                    comb = np.where(
                        ok, gm + (gp - gm) * (t2 / (t1 + t2)), np.inf
                    )
                    np.minimum(best, comb, out=best)
    delta = g - best
    g[...] = best
    return float(np.sum(delta * delta))
