import math

import numpy as np
import pytest

from ccx.envelope import SolverConfig, full_reach_stencil
from ccx.errors import (
    NotAvailable,
    OutOfDomain,
    ParamOutOfRange,
    RegimeUnsupported,
)
from ccx.grid import GridSpec, ScalarField
from ccx.prototypes import (
    PrototypeId,
    analytic_average,
    analytic_lower,
    analytic_upper,
    default_params,
    fan_jump_graph,
)
from ccx.transforms import TransformParams, lower_transform, upper_transform

ALL_IDS = list(PrototypeId)


class TestParamHandling:
    def test_defaults_are_copies(self):
        d = default_params("four_point")
        d["lam"] = 999.0
        assert default_params("four_point")["lam"] == 3.0

    def test_unknown_param_rejected(self):
        with pytest.raises(ParamOutOfRange):
            analytic_average("four_point", 0.0, 0.0, radius=2.0)

    def test_nonpositive_lam_rejected(self):
        with pytest.raises(ParamOutOfRange):
            analytic_average("four_point", 0.0, 0.0, lam=-1.0)

    def test_scalar_in_float_out(self):
        out = analytic_average("four_point", 0.5, 0.25)
        assert isinstance(out, float)

    def test_broadcasting(self):
        x = np.linspace(-1, 1, 11)
        out = analytic_average("four_point", x, 0.0)
        assert out.shape == (11,)


class TestDomains:
    @pytest.mark.parametrize(
        "pid, point",
        [
            ("four_point", (1.5, 0.0)),
            ("eight_point", (1.5, 1.5)),
            ("two_gables", (0.0, 1.5)),
            ("roof_box", (0.6, 0.0)),
            ("jump_strip", (0.0, 0.7)),
            ("annulus_levels", (2.5, 0.0)),
            ("wedge_levels", (1.0, 1.5)),
        ],
    )
    def test_outside_raises(self, pid, point):
        with pytest.raises(OutOfDomain):
            analytic_average(pid, *point)

    def test_check_domain_off(self):
        out = analytic_average("four_point", 5.0, 0.0, check_domain=False)
        assert np.isfinite(out)

    def test_wedge_negative_x_outside(self):
        with pytest.raises(OutOfDomain):
            analytic_average("wedge_levels", -0.1, 0.0)


class TestRegimes:
    def test_roof_box_needs_tall_box(self):
        with pytest.raises(RegimeUnsupported):
            analytic_average("roof_box", 0.0, 0.0, r=1.0, h=0.5)

    def test_jump_strip_needs_wide_box(self):
        with pytest.raises(RegimeUnsupported):
            analytic_average("jump_strip", 0.0, 0.0, r=0.5, h=0.6)

    def test_jump_strip_lam_floor(self):
        with pytest.raises(ParamOutOfRange):
            analytic_average("jump_strip", 0.0, 0.0, lam=0.5)

    def test_annulus_needs_outer_larger(self):
        with pytest.raises(ParamOutOfRange):
            analytic_average("annulus_levels", 0.0, 0.0, r=2.0, R=1.0)

    def test_two_gables_lam_floor(self):
        with pytest.raises(ParamOutOfRange):
            analytic_average("two_gables", 0.0, 0.0, lam=0.1)

    def test_fan_jump_has_no_pointwise_form(self):
        with pytest.raises(NotAvailable):
            analytic_average("fan_jump", 0.1, 0.0)


class TestSampleInterpolation:
    """The closed-form average must hit the sample data on K."""

    def test_four_point_corners(self):
        for x, y, v in [(1, 1, -1), (-1, -1, -1), (1, -1, 1), (-1, 1, 1)]:
            assert analytic_average("four_point", x, y) == pytest.approx(v)

    def test_eight_point_ring(self):
        s = math.sqrt(2.0)
        for x, y, v in [(s, 0, -1), (-s, 0, -1), (0, s, -1), (0, -s, -1),
                        (1, 1, 1), (1, -1, 1), (-1, 1, 1), (-1, -1, 1)]:
            assert analytic_average("eight_point", x, y) == pytest.approx(v)

    def test_cross_parabolas_diagonals(self):
        t = np.linspace(-1, 1, 9)
        assert np.allclose(analytic_average("cross_parabolas", t, t), -t * t)
        assert np.allclose(analytic_average("cross_parabolas", t, -t), t * t)

    def test_cross_abs_axes(self):
        t = np.linspace(-1, 1, 9)
        assert np.allclose(analytic_average("cross_abs", t, 0.0), np.abs(t))
        assert np.allclose(analytic_average("cross_abs", 0.0, t), -np.abs(t))

    def test_two_gables_interpolates_away_from_ridge(self):
        lam = 2.0
        yc = 1.0 / (2.0 * lam)
        for y in (yc, 0.5, 1.0, -0.8):
            if abs(y) >= yc:
                got = analytic_average("two_gables", 1.0, y, lam=lam)
                assert got == pytest.approx(1.0 - abs(y))
        # the concave ridge itself is rounded by 1/(8 lam), never hit exactly
        assert analytic_average("two_gables", 1.0, 0.0, lam=lam) == pytest.approx(
            1.0 - 1.0 / (8.0 * lam)
        )

    def test_annulus_levels_and_linear_blend(self):
        p = dict(lam=5.0, r=1.0, R=2.0, m=5.0)
        assert analytic_average("annulus_levels", 1.0, 0.0, **p) == pytest.approx(5.0)
        assert analytic_average("annulus_levels", 0.3, 0.0, **p) == pytest.approx(5.0)
        assert analytic_average("annulus_levels", 2.0, 0.0, **p) == pytest.approx(0.0)
        assert analytic_average("annulus_levels", 1.5, 0.0, **p) == pytest.approx(2.5)
        # radial symmetry
        th = np.linspace(0, 2 * np.pi, 17)
        vals = analytic_average(
            "annulus_levels", 1.4 * np.cos(th), 1.4 * np.sin(th), **p
        )
        assert np.ptp(vals) < 1e-12

    def test_jump_strip_constant_in_y(self):
        xs = np.linspace(-1, 1, 21)
        top = analytic_average("jump_strip", xs, 0.55)
        mid = analytic_average("jump_strip", xs, 0.0)
        assert np.allclose(top, mid)
        assert top[0] == -1.0 and top[-1] == 1.0

    def test_roof_box_profile(self):
        lam, h = 10.0, 1.0
        assert analytic_average("roof_box", 0.1, 0.5) == pytest.approx(h - 0.5)
        assert analytic_average("roof_box", 0.0, 0.0) == pytest.approx(
            h - 1.0 / (4.0 * lam)
        )


class TestAverageIsMeanOfTransforms:
    @pytest.mark.parametrize(
        "pid", ["four_point", "eight_point", "cross_parabolas", "cross_abs",
                "two_gables", "annulus_levels"]
    )
    def test_identity(self, pid, rng):
        # draw points inside each domain via rejection from a safe box
        box = {"four_point": 1.0, "eight_point": 0.99, "cross_parabolas": 1.0,
               "cross_abs": 1.0, "two_gables": 0.9, "annulus_levels": 1.4}[pid]
        pts = rng.uniform(-box, box, size=(300, 2))
        x, y = pts[:, 0], pts[:, 1]
        if pid == "two_gables":
            y = y.clip(-0.9, 0.9)
        lo = analytic_lower(pid, x, y)
        hi = analytic_upper(pid, x, y)
        avg = analytic_average(pid, x, y)
        assert np.allclose(avg, 0.5 * (lo + hi), atol=1e-12)
        # sampled-data ordering: +M-extension envelope above, -M below
        assert (lo >= avg - 1e-12).all()
        assert (hi <= avg + 1e-12).all()

    def test_transform_forms_missing(self):
        with pytest.raises(NotAvailable):
            analytic_lower("wedge_levels", 0.5, 0.0)
        with pytest.raises(NotAvailable):
            analytic_upper("roof_box", 0.0, 0.0)


class TestSignJump:
    def test_odd_symmetry(self):
        x = np.linspace(-0.5, 0.5, 41)
        avg = analytic_average("sign_jump_1d", x, 0.0)
        assert np.allclose(avg, -avg[::-1], atol=1e-14)

    def test_flats_and_midpoint(self):
        lam = 100.0
        t = math.sqrt(2.0 / lam)
        assert analytic_average("sign_jump_1d", 2 * t, 0.0, lam=lam) == 1.0
        assert analytic_average("sign_jump_1d", -2 * t, 0.0, lam=lam) == -1.0
        assert analytic_average("sign_jump_1d", 0.0, 0.0, lam=lam) == 0.0

    def test_matches_grid_transforms(self):
        # the closed forms are the transforms of the function's closures: the
        # convex envelope sees only the lsc representative (f(0) = -1), the
        # upper transform the usc one (f(0) = +1); the grid node at 0 must
        # carry that closure value since it has no one-sided limits
        lam, n = 100.0, 241
        spec = GridSpec(n, 1, -0.6, 0.0, 1.2 / (n - 1))
        xs = spec.xs()
        f_lsc = ScalarField(spec, np.where(xs > 0, 1.0, -1.0).reshape(1, n))
        f_usc = ScalarField(spec, np.where(xs >= 0, 1.0, -1.0).reshape(1, n))
        p = TransformParams(
            lam=lam,
            stencil=full_reach_stencil(spec),
            solver=SolverConfig(tol=1e-12),
        )
        lo, _ = lower_transform(f_lsc, p)
        hi, _ = upper_transform(f_usc, p)
        from ccx.prototypes import _sign_pieces

        elo, ehi, eavg = _sign_pieces(xs, lam)
        tol = 2.0 * lam * spec.h**2
        assert np.abs(lo.values[0] - elo).max() < tol
        assert np.abs(hi.values[0] - ehi).max() < tol
        avg = 0.5 * (lo.values[0] + hi.values[0])
        assert np.abs(avg - eavg).max() < tol


class TestWedge:
    def test_level_lines_pinned(self):
        # inner V carries 1, outer V carries 2
        for a, lam in [(1.0, 1.0), (2.0, 1.0), (0.5, 1.0), (1.0, 4.0)]:
            s = math.sqrt(lam)
            xs = np.linspace(0.01, 2.5 / (a * s), 40)
            on_inner = analytic_average("wedge_levels", xs, a * xs, lam=lam, a=a)
            assert np.abs(on_inner - 1.0).max() < 1e-10
            rt = math.sqrt(1 + a * a)
            # outer V: normal distance d = 1, vertex at x = rt/(a s)
            xv = rt / (a * s)
            xs2 = np.linspace(xv, xv + 1.5 / s, 30)
            yo = a * (xs2 - xv)
            on_outer = analytic_average("wedge_levels", xs2, yo, lam=lam, a=a)
            assert np.abs(on_outer - 2.0).max() < 1e-10

    def test_apex_plateau(self):
        assert analytic_average("wedge_levels", 1e-4, 0.0) == 1.0

    def test_far_band_is_one_plus_distance(self):
        # beyond the outer vertex the value grows linearly with the normal
        # distance from the inner ray
        a, lam = 1.0, 1.0
        x, y = 3.0, 2.5
        d = (a * x - y) / math.sqrt(1 + a * a)
        got = analytic_average("wedge_levels", x, y, lam=lam, a=a)
        assert got == pytest.approx(1.0 + d)

    @pytest.mark.parametrize("a,lam", [(1.0, 1.0), (2.0, 3.0), (0.5, 1.0)])
    def test_branch_continuity(self, a, lam):
        # no jumps across any of the seven zone boundaries: neighboring
        # values on a fine grid may differ by at most grad_max * step
        s = math.sqrt(lam)
        xm = 3.0 / (min(a, 1.0) * s)
        n = 801
        xs = np.linspace(0, xm, n)
        ys = np.linspace(0, a * xm, n)
        X, Y = np.meshgrid(xs, ys)
        V = analytic_average("wedge_levels", X, Y, check_domain=False,
                             lam=lam, a=a)
        inside = np.abs(Y) <= a * X
        V = np.where(inside, V, np.nan)
        step = max(xs[1] - xs[0], ys[1] - ys[0])
        grad_max = 3.0 * math.sqrt(1 + a * a) * s
        dx = np.abs(np.diff(V, axis=1))
        dy = np.abs(np.diff(V, axis=0))
        assert np.nanmax(dx) <= grad_max * step
        assert np.nanmax(dy) <= grad_max * step

    def test_scaling_law(self):
        # A_lam(x, y) = A_1(sqrt(lam) x, sqrt(lam) y)
        lam = 7.0
        s = math.sqrt(lam)
        pts = np.array([[0.3, 0.1], [0.8, 0.4], [1.5, 0.9]])
        a1 = analytic_average("wedge_levels", s * pts[:, 0], s * pts[:, 1],
                              lam=1.0)
        al = analytic_average("wedge_levels", pts[:, 0], pts[:, 1], lam=lam)
        assert np.allclose(a1, al, atol=1e-12)


class TestFanJumpGraph:
    def test_bisector_is_zero(self):
        for s in (0.0, 0.3, 1.0):
            x, y, v = fan_jump_graph(1.0, 1.0, 10.0, s, s)
            assert v == pytest.approx(0.0, abs=1e-12)
            assert x >= 0

    def test_offsets_validated(self):
        with pytest.raises(ParamOutOfRange):
            fan_jump_graph(1.0, 1.0, 10.0, -0.1, 0.0)
        with pytest.raises(ParamOutOfRange):
            # c = 2m/lam = 0.2; su^2 - sl^2 = 1 > c
            fan_jump_graph(1.0, 1.0, 10.0, 0.0, 1.0)

    def test_array_form(self):
        sl = np.array([0.0, 0.1, 0.2])
        x, y, v = fan_jump_graph(1.0, 1.0, 10.0, sl, sl)
        assert x.shape == (3,)
        assert np.allclose(v, 0.0, atol=1e-12)
