import numpy as np
import pytest

from ccx.grid import GridSpec, SampledFunction, SampleMask, ScalarField


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_spec():
    """33x33 unit-square grid."""
    return GridSpec(33, 33, 0.0, 0.0, 1.0 / 32.0)


def make_field(spec, fn):
    x, y = spec.node_coords()
    return ScalarField(spec, np.asarray(fn(x, y), dtype=float))


def sparse_sample(spec, fn, stride=8):
    """Sample fn on a coarse sub-lattice of the grid."""
    member = np.zeros(spec.shape, dtype=bool)
    member[::stride, ::stride] = True
    mask = SampleMask(spec, member)
    x, y = spec.node_coords()
    values = np.asarray(fn(x, y), dtype=float)[member]
    return SampledFunction(mask, values)
