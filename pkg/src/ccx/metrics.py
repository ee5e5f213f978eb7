"""Error and quality metrics: relative L2 error and PSNR."""

from __future__ import annotations

import math

import numpy as np

from .errors import ZeroDenominator

__all__ = ["relative_l2", "psnr", "linf"]


def _paired(f, g, mask=None):
    if f.spec != g.spec:
        raise ValueError("fields live on different grids")
    a = f.values
    b = g.values
    if mask is not None:
        if mask.spec != f.spec:
            raise ValueError("mask lives on a different grid")
        a = a[mask.member]
        b = b[mask.member]
    return a, b


def relative_l2(f, g, mask=None):
    """sqrt(sum (f-g)^2) / sqrt(sum f^2), over all nodes or mask members.

    Plain discrete sums: the h-weights of an integral norm cancel in the
    ratio on a uniform grid.

    Raises
    ------
    ZeroDenominator
        If f vanishes identically on the evaluation set.
    """
    a, b = _paired(f, g, mask)
    denom = math.sqrt(float(np.sum(a * a)))
    if denom == 0.0:
        raise ZeroDenominator("reference field has zero norm on this set")
    num = math.sqrt(float(np.sum((a - b) ** 2)))
    return num / denom


def linf(f, g, mask=None):
    """Max abs difference over all nodes or mask members."""
    a, b = _paired(f, g, mask)
    return float(np.abs(a - b).max())


def psnr(original, restored):
    """10*log10(255^2 / MSE) for 8-bit images; inf when MSE = 0."""
    a, b = _paired(original, restored)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)
