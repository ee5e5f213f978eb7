"""File codecs: CSV scalar fields and masks, binary 8-bit PGM images.

CSV layout (fields and masks share it; masks store 0/1 in the value column):

    nx,ny,x0,y0,h
    201,201,0,0,0.005
    i,j,value
    0,0,0.76540424…
    …

Floats are printed with 17 significant digits so a write/read round trip is
bit-exact at 64-bit precision.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, SampleMask, ScalarField

__all__ = [
    "write_field_csv",
    "read_field_csv",
    "write_mask_csv",
    "read_mask_csv",
    "read_points_csv",
    "write_pgm",
    "read_pgm",
]

_HEADER = "nx,ny,x0,y0,h"


def _ij_table(spec):
    jj, ii = np.mgrid[0 : spec.ny, 0 : spec.nx]
    return ii.ravel(), jj.ravel()


def _write_grid_csv(path, spec, column):
    ii, jj = _ij_table(spec)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_HEADER + "\n")
        fh.write(
            f"{spec.nx},{spec.ny},{spec.x0:.17g},{spec.y0:.17g},{spec.h:.17g}\n"
        )
        fh.write("i,j,value\n")
        np.savetxt(fh, np.column_stack([ii, jj, column]), fmt="%d,%d,%.17g")


def write_field_csv(path, field):
    """Write a ScalarField in the CSV field format."""
    _write_grid_csv(path, field.spec, field.values.ravel())


def write_mask_csv(path, mask):
    """Write a SampleMask in the CSV field format (values 0/1)."""
    _write_grid_csv(path, mask.spec, mask.member.ravel().astype(int))


def _read_grid_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    pos = 0
    if lines[pos].replace(" ", "").lower() == _HEADER:
        pos += 1
    try:
        nx_s, ny_s, x0_s, y0_s, h_s = lines[pos].split(",")
    except ValueError as exc:
        raise ValueError(f"{path}: malformed grid header line") from exc
    spec = GridSpec(int(nx_s), int(ny_s), float(x0_s), float(y0_s), float(h_s))
    pos += 1
    if pos < len(lines) and lines[pos].replace(" ", "").lower().startswith("i,j"):
        pos += 1
    data = np.array(
        [tuple(float(t) for t in ln.split(",")) for ln in lines[pos:]]
    )
    if data.size == 0 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected rows 'i,j,value'")
    if data.shape[0] != spec.n_nodes:
        raise ValueError(
            f"{path}: {data.shape[0]} rows for {spec.n_nodes} grid nodes"
        )
    ii = data[:, 0].astype(int)
    jj = data[:, 1].astype(int)
    if (ii < 0).any() or (ii >= spec.nx).any() or (jj < 0).any() or (jj >= spec.ny).any():
        raise ValueError(f"{path}: node index out of range")
    grid = np.empty(spec.shape)
    grid.fill(np.nan)
    grid[jj, ii] = data[:, 2]
    return spec, grid


def read_field_csv(path):
    """Read a ScalarField from the CSV field format."""
    spec, grid = _read_grid_csv(path)
    return ScalarField(spec, grid)


def read_mask_csv(path):
    """Read a SampleMask from the CSV field format."""
    spec, grid = _read_grid_csv(path)
    bad = ~np.isin(grid, (0.0, 1.0))
    if bad.any():
        raise ValueError(f"{path}: mask values must be 0 or 1")
    return SampleMask(spec, grid.astype(bool))


def read_points_csv(path):
    """Read a point cloud file with rows ``x,y,value``.

    A leading ``x,y,value`` header line is optional.

    Returns
    -------
    (points, values) : (ndarray (n, 2), ndarray (n,))
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines and lines[0].replace(" ", "").lower().startswith("x,y"):
        lines = lines[1:]
    rows = [tuple(float(t) for t in ln.split(",")) for ln in lines]
    data = np.array(rows)
    if data.size == 0 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected rows 'x,y,value'")
    return data[:, :2].copy(), data[:, 2].copy()


def write_pgm(path, values):
    """Write a 2D array as binary 8-bit PGM (P5), rounding and clipping."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {a.shape}")
    a8 = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (a8.shape[1], a8.shape[0]))
        fh.write(a8.tobytes())


def read_pgm(path):
    """Read a binary 8-bit PGM (P5) into a float64 array in [0, 255]."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header = magic, width, height, maxval; comments start with '#'
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
    n = width * height
    pixels = np.frombuffer(raw, dtype=np.uint8, count=n, offset=pos)
    return pixels.reshape(height, width).astype(float)
