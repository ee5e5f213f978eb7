import numpy as np
import pytest

from ccx.errors import ModuleTooSmall, NonFiniteValue, SingleSample
from ccx.grid import (
    GridSpec,
    SampledFunction,
    SampleMask,
    ScalarField,
    extend,
    lipschitz_lower_bound,
)

from conftest import make_field


class TestGridSpec:
    def test_rejects_degenerate_sides(self):
        with pytest.raises(ValueError):
            GridSpec(1, 5, 0.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            GridSpec(5, 0, 0.0, 0.0, 0.1)

    def test_one_row_grid_is_legal(self):
        spec = GridSpec(5, 1, 0.0, 0.0, 0.1)
        assert spec.shape == (1, 5)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            GridSpec(5, 5, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            GridSpec(5, 5, 0.0, 0.0, -0.1)

    def test_shape_is_row_major(self):
        spec = GridSpec(4, 7, 0.0, 0.0, 1.0)
        assert spec.shape == (7, 4)
        assert spec.n_nodes == 28

    def test_coordinates(self):
        spec = GridSpec(3, 2, -1.0, 2.0, 0.5)
        assert np.allclose(spec.xs(), [-1.0, -0.5, 0.0])
        assert np.allclose(spec.ys(), [2.0, 2.5])
        X, Y = spec.node_coords()
        assert X.shape == (2, 3)
        assert X[0, 2] == 0.0 and Y[1, 0] == 2.5

    def test_center_and_diameter(self):
        spec = GridSpec(5, 5, 0.0, 0.0, 0.25)
        assert spec.center() == (0.5, 0.5)
        assert spec.bbox_diameter() == pytest.approx(np.sqrt(2.0))

    def test_nearest_node_clips(self):
        spec = GridSpec(5, 5, 0.0, 0.0, 0.25)
        assert spec.nearest_node(0.26, 0.0) == (1, 0)
        assert spec.nearest_node(-3.0, 9.0) == (0, 4)


class TestScalarField:
    def test_shape_mismatch(self, unit_spec):
        with pytest.raises(ValueError):
            ScalarField(unit_spec, np.zeros((3, 3)))

    def test_flat_input_reshapes(self):
        spec = GridSpec(3, 2, 0.0, 0.0, 1.0)
        f = ScalarField(spec, np.arange(6.0))
        assert f.values.shape == (2, 3)

    def test_rejects_nan(self, unit_spec):
        bad = np.zeros(unit_spec.shape)
        bad[0, 0] = np.nan
        with pytest.raises(NonFiniteValue):
            ScalarField(unit_spec, bad)

    def test_values_read_only(self, unit_spec):
        f = ScalarField(unit_spec, np.zeros(unit_spec.shape))
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0


class TestSampleMask:
    def test_empty_mask_rejected(self, unit_spec):
        with pytest.raises(ValueError):
            SampleMask(unit_spec, np.zeros(unit_spec.shape, dtype=bool))

    def test_count_and_coords_row_major(self):
        spec = GridSpec(3, 3, 0.0, 0.0, 0.5)
        member = np.zeros((3, 3), dtype=bool)
        member[0, 2] = member[2, 0] = True
        mask = SampleMask(spec, member)
        assert mask.count == 2
        coords = mask.node_coords()
        # row-major: (j=0, i=2) first, then (j=2, i=0)
        assert np.allclose(coords, [[1.0, 0.0], [0.0, 1.0]])


class TestSampledFunction:
    def test_value_count_must_match(self, unit_spec):
        member = np.zeros(unit_spec.shape, dtype=bool)
        member[0, :3] = True
        mask = SampleMask(unit_spec, member)
        with pytest.raises(ValueError):
            SampledFunction(mask, np.zeros(4))

    def test_module_must_dominate(self, unit_spec):
        member = np.zeros(unit_spec.shape, dtype=bool)
        member[0, 0] = True
        mask = SampleMask(unit_spec, member)
        with pytest.raises(ModuleTooSmall):
            SampledFunction(mask, [5.0], module=5.0)

    def test_from_field_grid_mismatch(self, unit_spec):
        f = ScalarField(unit_spec, np.zeros(unit_spec.shape))
        other = GridSpec(5, 5, 0.0, 0.0, 0.25)
        mask = SampleMask(other, np.ones((5, 5), dtype=bool))
        with pytest.raises(ValueError):
            SampledFunction.from_field(f, mask)

    def test_max_abs(self, unit_spec):
        member = np.zeros(unit_spec.shape, dtype=bool)
        member[0, :2] = True
        sf = SampledFunction(SampleMask(unit_spec, member), [-3.0, 2.0])
        assert sf.max_abs == 3.0


class TestExtend:
    def _sf(self, spec):
        member = np.zeros(spec.shape, dtype=bool)
        member[1, 1] = member[2, 3] = True
        return SampledFunction(SampleMask(spec, member), [1.0, -2.0])

    def test_plus_minus_fill(self, unit_spec):
        sf = self._sf(unit_spec)
        fp = extend(sf, "plus", 10.0)
        fm = extend(sf, "minus", 10.0)
        assert fp.values[1, 1] == 1.0 and fm.values[1, 1] == 1.0
        assert fp.values[0, 0] == 10.0 and fm.values[0, 0] == -10.0

    def test_bad_sign(self, unit_spec):
        with pytest.raises(ValueError):
            extend(self._sf(unit_spec), "up", 10.0)

    def test_unresolved_module(self, unit_spec):
        with pytest.raises(ValueError):
            extend(self._sf(unit_spec), "plus")

    def test_small_module(self, unit_spec):
        with pytest.raises(ModuleTooSmall):
            extend(self._sf(unit_spec), "plus", 1.5)


class TestLipschitzBound:
    def test_single_sample_rejected(self, unit_spec):
        member = np.zeros(unit_spec.shape, dtype=bool)
        member[0, 0] = True
        sf = SampledFunction(SampleMask(unit_spec, member), [1.0])
        with pytest.raises(SingleSample):
            lipschitz_lower_bound(sf)

    def test_affine_samples_recover_slope(self, unit_spec):
        f = make_field(unit_spec, lambda x, y: 3.0 * x - 4.0 * y)
        member = np.zeros(unit_spec.shape, dtype=bool)
        member[::4, ::4] = True
        sf = SampledFunction.from_field(f, SampleMask(unit_spec, member))
        l, alpha = lipschitz_lower_bound(sf)
        # gradient magnitude 5 is attained only in the (3, -4) direction,
        # which the lattice approaches but never hits exactly
        assert 4.5 <= l <= 5.0 + 1e-12
        assert alpha == pytest.approx(4.0 / 32.0)

    def test_alpha_is_min_spacing(self):
        spec = GridSpec(9, 9, 0.0, 0.0, 1.0)
        member = np.zeros((9, 9), dtype=bool)
        member[0, 0] = member[0, 1] = member[5, 7] = True
        sf = SampledFunction(SampleMask(spec, member), [0.0, 1.0, 2.0])
        _, alpha = lipschitz_lower_bound(sf)
        assert alpha == pytest.approx(1.0)
