import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

import proxcycle.catalog as catalog
from proxcycle import (PIECE_KINDS, ConvergenceError, CycleProblem, DimensionMismatchError,
                       IndicatorAffineSubspace, IndicatorBall, IndicatorBox,
                       IndicatorEpiExpShift, IndicatorHalfspace, IndicatorLine, Linear,
                       Quadratic, UnsupportedKindError, ValidationError,
                       check_blanket_assumption, existence_diagnostic, normal_cone_contains,
                       piece_from_dict, prox, prox_product)
from strategies import KINDS, epi_axis, random_piece

GAMMAS = (0.3, 0.5, 1.0)
seeds = st.integers(0, 2 ** 32 - 1)


def probe_points(piece, rng, n=100):
    """Points of dom f; indicator probes are projections of random points."""
    raw = 4 * rng.normal(size=(n, piece.dim))
    if piece.is_indicator:
        return np.array([piece.prox(r) for r in raw])
    return raw


class TestProxProperties:
    @pytest.mark.parametrize("kind", KINDS)
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_variational_inequality(self, kind, seed):
        rng = np.random.default_rng(seed)
        piece = random_piece(kind, rng)
        for gamma in GAMMAS:
            v = 4 * rng.normal(size=piece.dim)
            p = prox(piece, gamma, v)
            fp = piece.value(p)
            assert math.isfinite(fp)
            for z in probe_points(piece, rng):
                lhs = (v - p) @ (z - p)
                assert lhs <= gamma * (piece.value(z) - fp) + 1e-8

    @pytest.mark.parametrize("kind", KINDS)
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_firmly_nonexpansive(self, kind, seed):
        rng = np.random.default_rng(seed)
        piece = random_piece(kind, rng)
        for gamma in GAMMAS:
            for _ in range(20):
                v1, v2 = 4 * rng.normal(size=(2, piece.dim))
                dp = prox(piece, gamma, v1) - prox(piece, gamma, v2)
                assert dp @ dp <= dp @ (v1 - v2) + 1e-10

    @pytest.mark.parametrize("kind", [k for k in KINDS if k.startswith("Indicator")])
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_projection_idempotent_and_gamma_free(self, kind, seed):
        rng = np.random.default_rng(seed)
        piece = random_piece(kind, rng)
        for _ in range(20):
            v = 4 * rng.normal(size=piece.dim)
            p = prox(piece, 1.0, v)
            assert np.abs(prox(piece, 1.0, p) - p).max() <= 1e-10
            assert np.abs(prox(piece, 0.3, v) - p).max() == 0.0
            assert piece.value(p) == 0.0


class TestSimpleProx:
    def test_quadratic_midpoint(self):
        a = np.array([2.0, -4.0])
        v = np.array([1.0, 1.0])
        np.testing.assert_allclose(prox(Quadratic(a, 1.0), 1.0, v), (v + a) / 2)

    def test_line_drops_orthogonal_part(self):
        line = IndicatorLine([0, 0], [1, 0])
        for gamma in GAMMAS:
            np.testing.assert_allclose(prox(line, gamma, [3, 5]), [3, 0])

    def test_linear_shift(self):
        np.testing.assert_allclose(prox(Linear([1.0, 2.0]), 0.5, [0.0, 0.0]), [-0.5, -1.0])

    def test_box_with_infinite_bounds(self):
        box = IndicatorBox(["-inf", 0.0], [1.0, "inf"])
        np.testing.assert_array_equal(prox(box, 1.0, [5.0, -3.0]), [1.0, 0.0])
        np.testing.assert_array_equal(prox(box, 1.0, [-50.0, 7.0]), [-50.0, 7.0])

    def test_point_subspace(self):
        pt = IndicatorAffineSubspace([1.0, 2.0], [])
        np.testing.assert_array_equal(prox(pt, 1.0, [9.0, 9.0]), [1.0, 2.0])
        assert pt.flags.coercive and pt.flags.bounded_domain

    def test_plane_in_r3(self):
        plane = IndicatorAffineSubspace([0.0, 0.0, 1.0], [[1, 0, 0], [1, 1, 0], [0, 2, 0]])
        np.testing.assert_allclose(prox(plane, 1.0, [3.0, 4.0, 5.0]), [3.0, 4.0, 1.0])

    def test_rejects_bad_gamma_and_shape(self):
        line = IndicatorLine([0, 0], [1, 0])
        with pytest.raises(ValidationError):
            prox(line, 0.0, [1.0, 1.0])
        with pytest.raises(DimensionMismatchError):
            prox(line, 1.0, [1.0, 1.0, 1.0])


class TestEpigraph:
    def test_origin_alpha0_matches_scalar_equation(self):
        # the projection of the origin has abscissa x* with x* = exp(-2 x*)
        p = prox(IndicatorEpiExpShift(0.0), 1.0, [0.0, 0.0])
        xs = scipy.optimize.brentq(lambda x: x - math.exp(-2 * x), 0.0, 1.0, xtol=1e-15)
        np.testing.assert_allclose(p, [xs, math.exp(-xs)], atol=1e-12)

    def test_origin_alpha0_minimises_over_boundary_grid(self):
        p = prox(IndicatorEpiExpShift(0.0), 1.0, [0.0, 0.0])
        xs = np.linspace(-1.0, 2.0, 300_001)
        d2 = xs ** 2 + np.exp(-xs) ** 2
        k = np.argmin(d2)
        assert abs(p[0] - xs[k]) <= 2e-5
        assert p @ p <= d2[k] + 1e-12

    @given(x0=st.floats(-5, 8), r0=st.floats(-5, 8), alpha=st.floats(0, 2))
    @settings(max_examples=200, deadline=None)
    def test_agrees_with_scalar_minimisation(self, x0, r0, alpha):
        piece = IndicatorEpiExpShift(alpha)
        p = prox(piece, 1.0, [x0, r0])
        assert p[1] >= math.exp(-p[0]) + alpha - 1e-10
        if r0 >= math.exp(-x0) + alpha:
            np.testing.assert_array_equal(p, [x0, r0])
            return
        dist2 = lambda x: (x - x0) ** 2 + (math.exp(-x) + alpha - r0) ** 2
        ref = scipy.optimize.minimize_scalar(dist2, bounds=(x0, x0 + 20), method="bounded",
                                             options={"xatol": 1e-12})
        assert dist2(p[0]) <= ref.fun + 1e-10

    def test_far_left_point(self):
        p = prox(IndicatorEpiExpShift(1.0), 1.0, [-30.0, 0.0])
        assert math.isfinite(p[0]) and p[1] >= math.exp(-p[0]) + 1.0 - 1e-10

    def test_cap_raises(self, monkeypatch):
        monkeypatch.setattr(catalog, "EPI_MAX_ITER", 3)
        with pytest.raises(ConvergenceError):
            prox(IndicatorEpiExpShift(0.0), 1.0, [0.0, 0.0])


class TestNormalCone:
    def test_line(self):
        line = IndicatorLine([0, 0], [1, 0])
        assert normal_cone_contains(line, [2, 0], [0, 7])
        assert not normal_cone_contains(line, [2, 0], [1, 7])
        assert not normal_cone_contains(line, [2, 1], [0, 7])

    @pytest.mark.parametrize("piece,u", [
        (IndicatorBall([0.0, 0.0], 1.0), [0.1, 0.2]),
        (IndicatorHalfspace([0.0, 1.0], 1.0), [3.0, -2.0]),
        (IndicatorBox([0.0, 0.0], [1.0, 1.0]), [0.5, 0.5]),
        (IndicatorEpiExpShift(1.0), [0.0, 5.0]),
    ])
    def test_interior_point_has_zero_cone(self, piece, u):
        assert not normal_cone_contains(piece, u, [0.3, -0.2])
        assert normal_cone_contains(piece, u, [0.0, 0.0])

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    @pytest.mark.parametrize("x", [-1.0, 0.0, 2.5])
    def test_epigraph_boundary(self, alpha, x):
        piece = IndicatorEpiExpShift(alpha)
        u = [x, math.exp(-x) + alpha]
        for lam in (0.5, 3.0):
            assert normal_cone_contains(piece, u, [-lam * math.exp(-x), -lam])
        assert not normal_cone_contains(piece, u, [math.exp(-x), 1.0])

    def test_halfspace_ball_box_boundary(self):
        assert normal_cone_contains(IndicatorHalfspace([0.0, 2.0], 2.0), [5.0, 1.0], [0.0, 3.0])
        assert not normal_cone_contains(IndicatorHalfspace([0.0, 2.0], 2.0), [5.0, 1.0], [0.0, -3.0])
        assert normal_cone_contains(IndicatorBall([1.0, 0.0], 2.0), [3.0, 0.0], [4.0, 0.0])
        assert not normal_cone_contains(IndicatorBall([1.0, 0.0], 2.0), [3.0, 0.0], [0.0, 4.0])
        box = IndicatorBox([0.0, 0.0], [1.0, 1.0])
        assert normal_cone_contains(box, [1.0, 0.0], [2.0, -3.0])
        assert not normal_cone_contains(box, [1.0, 0.0], [-2.0, -3.0])

    def test_subspace(self):
        plane = IndicatorAffineSubspace([0.0, 0.0, 0.0], [[1, 0, 0], [0, 1, 0]])
        assert normal_cone_contains(plane, [1.0, 2.0, 0.0], [0.0, 0.0, -5.0])
        assert not normal_cone_contains(plane, [1.0, 2.0, 0.0], [0.1, 0.0, -5.0])

    @pytest.mark.parametrize("piece", [Quadratic([0.0], 1.0), Linear([1.0])])
    def test_unsupported_for_functions(self, piece):
        with pytest.raises(UnsupportedKindError):
            normal_cone_contains(piece, [0.0], [0.0])


class TestValidation:
    def test_zero_direction(self):
        with pytest.raises(ValidationError, match="zero direction"):
            IndicatorLine([0, 0], [0, 0])

    @pytest.mark.parametrize("build", [
        lambda: IndicatorBall([0.0], -1.0),
        lambda: IndicatorBox([1.0, 0.0], [0.0, 1.0]),
        lambda: IndicatorBox(["inf"], [1.0]),
        lambda: IndicatorBox(["nope"], [1.0]),
        lambda: IndicatorEpiExpShift(-0.5),
        lambda: Quadratic([0.0], 0.0),
        lambda: IndicatorHalfspace([0.0, 0.0], 1.0),
        lambda: IndicatorLine([0, float("nan")], [1, 0]),
    ])
    def test_invalid_parameters(self, build):
        with pytest.raises(ValidationError):
            build()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            IndicatorLine([0, 0], [1, 0, 0])
        with pytest.raises(DimensionMismatchError):
            CycleProblem((IndicatorLine([0, 0], [1, 0]), Quadratic([0.0], 1.0)), 2)

    @pytest.mark.parametrize("kind", KINDS)
    def test_dict_round_trip(self, kind):
        piece = random_piece(kind, np.random.default_rng(3))
        again = piece_from_dict(piece.to_dict())
        assert type(again) is type(piece)
        assert again.to_dict() == piece.to_dict()
        assert again.flags == piece.flags

    def test_from_dict_strict(self):
        with pytest.raises(ValidationError, match="unknown piece kind"):
            piece_from_dict({"kind": "Circle"})
        with pytest.raises(ValidationError):
            piece_from_dict({"kind": "Linear", "slope": [1.0], "extra": 1})
        with pytest.raises(ValidationError):
            piece_from_dict({"slope": [1.0]})

    def test_all_kinds_registered(self):
        assert set(PIECE_KINDS) == set(KINDS)


class TestFlags:
    def test_consistent_with_kind(self):
        assert IndicatorBall([0.0, 0.0], 1.0).flags.bounded_domain
        assert not IndicatorBall([0.0, 0.0], 1.0).flags.polyhedral
        assert IndicatorBall([0.0], 1.0).flags.polyhedral
        assert not IndicatorLine([0, 0], [1, 0]).flags.coercive
        assert IndicatorBox([0, 0], [1, 1]).flags.coercive
        assert not IndicatorBox([0, "-inf"], [1, 1]).flags.coercive
        assert Quadratic([0.0], 2.0).flags.supercoercive
        assert not Linear([1.0]).flags.bounded_below
        assert Linear([0.0]).flags.bounded_below


def line(a, b):
    return IndicatorLine(a, b)


class TestBlanketAssumption:
    def test_all_indicators(self):
        out = check_blanket_assumption(epi_axis(1.0))
        assert out == {"holds": True, "reason": "inf f_i = 0 for all i"}

    def test_linear_with_unbounded_partner(self):
        prob = CycleProblem((Linear([1.0, 0.0]), Linear([0.0, 1.0])), 2)
        out = check_blanket_assumption(prob)
        assert not out["holds"] and "unknown" in out["reason"]

    def test_ball_present(self):
        prob = CycleProblem((IndicatorBall([0.0, 0.0], 1.0), Linear([3.0, 1.0])), 2)
        assert check_blanket_assumption(prob)["holds"]

    def test_quadratic_supercoercive(self):
        prob = CycleProblem((Quadratic([0.0, 0.0], 1.0), Linear([3.0, 1.0])), 2)
        assert check_blanket_assumption(prob)["holds"]

    def test_balanced_linear_slopes(self):
        prob = CycleProblem((Linear([1.0, 2.0]), Linear([-1.0, -2.0]),
                             line([0, 0], [1, 0])), 2)
        assert check_blanket_assumption(prob)["holds"]


class TestExistence:
    def test_two_lines_polyhedral(self):
        prob = CycleProblem((line([0, 0], [1, 0]), line([0, 1], [1, 0])), 2)
        assert existence_diagnostic(prob)["classical_cycle_guaranteed"]

    def test_epi_axis_not_guaranteed(self):
        for alpha in (0.0, 1.0):
            assert not existence_diagnostic(epi_axis(alpha))["classical_cycle_guaranteed"]

    def test_ball_and_line_coercive(self):
        prob = CycleProblem((IndicatorBall([0.0, 0.0], 1.0), line([0, 5], [1, 0])), 2)
        out = existence_diagnostic(prob)
        assert out["classical_cycle_guaranteed"] and "coercive" in out["reason"]

    def test_polyhedral_needs_blanket(self):
        prob = CycleProblem((Linear([1.0, 0.0]), Linear([1.0, 0.0])), 2)
        assert not existence_diagnostic(prob)["classical_cycle_guaranteed"]


class TestProxProduct:
    def test_quadratic_midpoints(self):
        a = np.array([[1.0, 2.0], [-3.0, 0.0]])
        prob = CycleProblem(tuple(Quadratic(ai, 1.0) for ai in a), 2)
        v = np.array([[3.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(prox_product(prob, 1.0, v), (v + a) / 2)

    def test_lines_blockwise(self):
        prob = CycleProblem((line([0, 0], [1, 0]), line([0, 0], [0, 1])), 2)
        np.testing.assert_allclose(prox_product(prob, 0.5, [[3, 4], [3, 4]]), [[3, 0], [0, 4]])

    def test_single_block(self):
        piece = Quadratic([1.0], 2.0)
        prob = CycleProblem((piece,), 1)
        np.testing.assert_allclose(prox_product(prob, 0.7, [[4.0]])[0], prox(piece, 0.7, [4.0]))

    def test_shape_checked(self):
        prob = CycleProblem((line([0, 0], [1, 0]),) * 2, 2)
        with pytest.raises(DimensionMismatchError):
            prox_product(prob, 1.0, np.zeros((3, 2)))
