"""Lower/upper transforms and the average approximation operator.

The lower transform subtracts the compensating quadratic from the convex
envelope of the lifted field:

    lower(f) = co[lam*|. - c|^2 + f] - lam*|. - c|^2

with c the grid center (the transform is translation invariant; centering
only minimizes the dynamic range of the quadratic). The upper transform is
the exact dual -lower(-f). The average approximation of a sampled function
runs the lower transform on the +M extension and the upper transform on the
-M extension and averages:

    average(f_K) = (lower(f_K^{+M}) + upper(f_K^{-M})) / 2

For lambda above the data's Lipschitz threshold this interpolates f_K and
fills the rest of the domain with the tightest piecewise-affine-like blend
of the two one-sided envelopes.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .envelope import EnvelopeReport, SolverConfig, StencilConfig, convex_envelope
from .errors import ModuleTooSmall
from .grid import SampledFunction, ScalarField, extend

__all__ = [
    "TransformParams",
    "AverageResult",
    "lower_transform",
    "upper_transform",
    "average_approximation",
    "resolve_module",
    "restriction_check",
]

# beyond this, lam*|x|^2 + M starts shedding significant bits
_CONDITIONING_LIMIT = 1e15


@dataclass(frozen=True)
class TransformParams:
    """Scale lambda, extension module, and solver settings.

    module=None means "resolve automatically": M is chosen large enough that
    every interpolation threshold of the theory holds on the grid's bounding
    box, with 50% slack (see resolve_module).
    """

    lam: float
    module: Optional[float] = None
    stencil: StencilConfig = StencilConfig()
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.module is not None and not self.module > 0:
            raise ValueError(f"module must be > 0, got {self.module}")


@dataclass(frozen=True)
class AverageResult:
    """Average approximation output: field, resolved M, solver reports."""

    field: ScalarField
    m_used: float
    lower_report: EnvelopeReport
    upper_report: EnvelopeReport


def _quadratic(spec, lam):
    x, y = spec.node_coords()
    cx, cy = spec.center()
    return lam * ((x - cx) ** 2 + (y - cy) ** 2)


def lower_transform(f, p):
    """Lower transform of a scalar field.

    Returns
    -------
    (ScalarField, EnvelopeReport)
        Output is <= f pointwise (up to solver tolerance).
    """
    q = _quadratic(f.spec, p.lam)
    env, report = convex_envelope(
        ScalarField(f.spec, f.values + q), p.stencil, p.solver
    )
    return ScalarField(f.spec, env.values - q), report


def upper_transform(f, p):
    """Upper transform, implemented as the exact dual -lower(-f)."""
    neg = ScalarField(f.spec, -f.values)
    low, report = lower_transform(neg, p)
    return ScalarField(f.spec, -low.values), report


def resolve_module(sf, lam):
    """Automatic module: 1.5 * (lam * d^2 + max|f_K|).

    d is the grid bounding-box diameter, which dominates both the sample
    diameter and the domain diameter, so the single rule covers every
    interpolation threshold that requires M > lam*d_K^2 + max|f| or
    M > max|f| + lam*d_Omega^2.
    """
    a0 = sf.max_abs
    d = sf.spec.bbox_diameter()
    m = 1.5 * (lam * d * d + a0)
    if m > _CONDITIONING_LIMIT / lam:
        warnings.warn(
            f"resolved module {m:.3g} exceeds {_CONDITIONING_LIMIT:.0e}/lambda; "
            "the lifted field may lose precision",
            RuntimeWarning,
            stacklevel=2,
        )
    return m


def _thread_budget():
    try:
        return int(os.environ.get("CCX_THREADS", "2"))
    except ValueError:
        return 1


def average_approximation(sf, p):
    """Average approximation of a sampled function over its grid.

    Parameters
    ----------
    sf : SampledFunction
    p : TransformParams
        p.module=None resolves M automatically.

    Returns
    -------
    AverageResult

    Raises
    ------
    ModuleTooSmall
        If a finite p.module does not dominate max |f_K|.
    """
    m_used = p.module if p.module is not None else resolve_module(sf, p.lam)
    if m_used <= sf.max_abs:
        raise ModuleTooSmall(
            f"module {m_used} does not dominate max |f_K| = {sf.max_abs}"
        )
    if sf.mask.count == 1:
        # both envelopes are tangent paraboloids through the single sample;
        # their mean is the constant sample value
        value = float(sf.values_on_k[0])
        const = ScalarField(sf.spec, np.full(sf.spec.shape, value))
        empty = EnvelopeReport(0, 0.0, True, "short-circuit")
        return AverageResult(const, float(m_used), empty, empty)
    f_plus = extend(sf, "plus", m_used)
    f_minus = extend(sf, "minus", m_used)
    if _thread_budget() >= 2:
        with ThreadPoolExecutor(max_workers=2) as pool:
            lo_fut = pool.submit(lower_transform, f_plus, p)
            hi_fut = pool.submit(upper_transform, f_minus, p)
            lo, lo_rep = lo_fut.result()
            hi, hi_rep = hi_fut.result()
    else:
        lo, lo_rep = lower_transform(f_plus, p)
        hi, hi_rep = upper_transform(f_minus, p)
    avg = ScalarField(sf.spec, 0.5 * (lo.values + hi.values))
    return AverageResult(avg, float(m_used), lo_rep, hi_rep)


# half-width, in rows, of the strip grid used by restriction_check
_STRIP_HALF_ROWS = 16


def restriction_check(sf_1d, p):
    """Deviation between 1D transforms and their 2D embedded counterparts.

    The 1D sample is placed on the center line of a 2D strip grid; off-line
    nodes carry +M/-M exactly like off-sample nodes do, so the 2D lower and
    upper transforms restricted to the line must reproduce the 1D transforms.
    Returns the max abs deviation over the line for both transforms.
    """
    spec1 = sf_1d.spec
    if spec1.ny != 1:
        raise ValueError("restriction_check needs an ny = 1 sample")
    half = _STRIP_HALF_ROWS
    from .grid import GridSpec, SampleMask  # local import to avoid cycle noise

    spec2 = GridSpec(spec1.nx, 2 * half + 1, spec1.x0, -half * spec1.h, spec1.h)
    member2 = np.zeros(spec2.shape, dtype=bool)
    member2[half, :] = sf_1d.mask.member[0, :]
    sf_2d = SampledFunction(SampleMask(spec2, member2), sf_1d.values_on_k)

    # one shared M keeps the line data of both problems identical
    m = p.module if p.module is not None else resolve_module(sf_2d, p.lam)

    lo1, _ = lower_transform(extend(sf_1d, "plus", m), p)
    hi1, _ = upper_transform(extend(sf_1d, "minus", m), p)
    lo2, _ = lower_transform(extend(sf_2d, "plus", m), p)
    hi2, _ = upper_transform(extend(sf_2d, "minus", m), p)

    dev_lo = np.abs(lo2.values[half, :] - lo1.values[0, :]).max()
    dev_hi = np.abs(hi2.values[half, :] - hi1.values[0, :]).max()
    return float(max(dev_lo, dev_hi))
