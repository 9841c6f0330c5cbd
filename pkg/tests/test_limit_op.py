import math

import numpy as np
import pytest

from normlap.limit_op import (
    LimitOperatorCoeffs,
    TangentData,
    apply_limit_operator,
    circle_first_order_coefficient,
    circle_limit_operator,
    circle_second_order_coefficient,
    circle_tangent_data,
    compute_limit_coeffs,
    ellipticity_floor,
    euclidean_ball_moment,
    first_order_coeff,
    nonuniform_correction,
    second_moment,
    tilt_c1,
    tilt_circle_weighted_l1,
    tilt_slice,
)
from normlap.norms import euclidean, weighted_l1

W_DEFAULT = (1.0, 1.5)


def circle_ab(theta):
    a = np.array([-math.sin(theta), math.cos(theta)])
    b = -0.5 * np.array([math.cos(theta), math.sin(theta)])
    return a, b


def random_tangent_pair(rng, D, min_coord=0.05):
    """Unit a with coordinates bounded away from zero (off the kink set),
    and b orthogonal to a."""
    while True:
        a = rng.standard_normal(D)
        a /= np.linalg.norm(a)
        if np.min(np.abs(a)) >= min_coord:
            break
    b = rng.standard_normal(D)
    b -= (b @ a) * a
    return a, b


def euclidean_tangent(D, d):
    return TangentData(L_basis=np.eye(D)[:, :d], Q_eval=lambda s: np.zeros(D))


class TestTilt:
    def test_euclidean_tilt_vanishes_c1(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b = random_tangent_pair(rng, 3)
            assert tilt_c1(euclidean(), a, b) == pytest.approx(0.0, abs=1e-12)

    def test_euclidean_tilt_vanishes_slice(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = random_tangent_pair(rng, 3)
            assert tilt_slice(euclidean(), a, b) == pytest.approx(0.0, abs=1e-8)

    def test_zero_curvature_gives_zero(self):
        a = np.array([1.0, 0.0]) / 1.0
        a = np.array([0.6, 0.8])
        b = np.zeros(2)
        assert tilt_c1(weighted_l1([1, 1.5]), a, b) == 0.0
        assert tilt_slice(weighted_l1([1, 1.5]), a, b) == 0.0

    def test_circle_value_at_quarter_turn(self):
        a, b = circle_ab(math.pi / 4)
        n = weighted_l1(W_DEFAULT)
        assert tilt_c1(n, a, b) == pytest.approx(0.032, abs=1e-9)
        assert tilt_slice(n, a, b) == pytest.approx(0.032, abs=1e-6)
        assert tilt_circle_weighted_l1(math.pi / 4, W_DEFAULT) == pytest.approx(0.032)

    def test_slice_matches_closed_form_on_circle(self):
        rng = np.random.default_rng(2)
        n = weighted_l1(W_DEFAULT)
        thetas = rng.uniform(0.03, math.pi / 2 - 0.03, 100)
        thetas += rng.integers(0, 4, 100) * math.pi / 2
        for theta in thetas:
            a, b = circle_ab(theta)
            expected = tilt_circle_weighted_l1(theta, W_DEFAULT)
            assert abs(tilt_slice(n, a, b) - expected) <= 1e-6

    def test_symmetric_rhombus_midpoint_is_flat(self):
        a, b = circle_ab(math.pi / 4)
        assert tilt_slice(weighted_l1([1, 1]), a, b) == pytest.approx(0.0, abs=1e-9)
        assert tilt_circle_weighted_l1(math.pi / 4, (1, 1)) == pytest.approx(0.0, abs=1e-15)

    def test_closed_form_zero_on_axes(self):
        for k in range(4):
            assert tilt_circle_weighted_l1(k * math.pi / 2, W_DEFAULT) == 0.0

    def test_slice_handles_vertex_of_the_slice_ball(self):
        # at theta = pi/2 the base point is a vertex of the rhombus; the
        # one-sided cone computation gives -w2 / (2 w1^3)
        w1, w2 = 2.0, 1.5
        a, b = circle_ab(math.pi / 2)
        got = tilt_slice(weighted_l1([w1, w2]), a, b)
        assert got == pytest.approx(-w2 / (2 * w1**3), rel=1e-6)

    def test_c1_raises_on_kink_and_suggests_slice(self):
        a, b = circle_ab(math.pi / 2)
        with pytest.raises(ValueError, match="tilt_slice"):
            tilt_c1(weighted_l1([1, 1.5]), a, b)

    def test_c1_equals_slice_at_random_smooth_points(self):
        rng = np.random.default_rng(3)
        for norm in (weighted_l1([1.0, 1.5, 0.7]), euclidean()):
            for _ in range(100):
                a, b = random_tangent_pair(rng, 3)
                assert abs(tilt_c1(norm, a, b) - tilt_slice(norm, a, b)) <= 1e-6

    def test_tilt_linear_in_curvature(self):
        rng = np.random.default_rng(4)
        n = weighted_l1([1.0, 2.0, 0.5])
        for _ in range(20):
            a, b = random_tangent_pair(rng, 3)
            t1 = tilt_c1(n, a, b)
            t2 = tilt_c1(n, a, 2 * b)
            assert t2 == pytest.approx(2 * t1, rel=1e-10, abs=1e-12)
            s1 = tilt_slice(n, a, b)
            s2 = tilt_slice(n, a, 2 * b)
            assert s2 == pytest.approx(2 * s1, rel=1e-5, abs=1e-8)

    def test_input_validation(self):
        n = weighted_l1([1, 1.5])
        with pytest.raises(ValueError, match="unit"):
            tilt_c1(n, np.array([2.0, 0.5]), np.zeros(2))
        with pytest.raises(ValueError, match="orthogonal"):
            tilt_c1(n, np.array([0.6, 0.8]), np.array([0.6, 0.8]))


class TestSecondMoment:
    def test_euclidean_interval(self):
        M, err = second_moment(euclidean(), euclidean_tangent(3, 1))
        assert M[0, 0] == pytest.approx(1 / 3, rel=1e-12)
        assert err == 0.0

    def test_euclidean_disc_and_ball(self):
        for d, expect in ((2, math.pi / 8), (3, 2 * math.pi / 15)):
            M, _ = second_moment(euclidean(), euclidean_tangent(3, d))
            assert np.allclose(M, expect * np.eye(d), atol=1e-3 * expect)
            assert euclidean_ball_moment(d) == pytest.approx(expect, rel=1e-12)

    def test_euclidean_ball_moment_formula(self):
        for d in (1, 2, 3, 4):
            assert euclidean_ball_moment(d) == pytest.approx(
                math.pi ** (d / 2) / (4 * math.gamma((d + 4) / 2)), rel=1e-14
            )

    def test_circle_weighted_l1_closed_form(self):
        theta = math.pi / 4
        M, _ = second_moment(weighted_l1(W_DEFAULT), circle_tangent_data(theta))
        A = 1.0 * abs(math.sin(theta)) + 1.5 * abs(math.cos(theta))
        assert M[0, 0] == pytest.approx(1 / (3 * A**3), rel=1e-12)
        assert M[0, 0] == pytest.approx(0.060340, abs=5e-7)
        assert circle_second_order_coefficient(theta, W_DEFAULT) == pytest.approx(M[0, 0], rel=1e-12)

    def test_qmc_fallback(self):
        for d, expect in ((2, math.pi / 8), (3, 2 * math.pi / 15)):
            M, stderr = second_moment(
                euclidean(), euclidean_tangent(3, d), method="qmc", qmc_points=2**17, seed=5
            )
            assert np.allclose(M, expect * np.eye(d), atol=1e-2 * expect)
            assert stderr > 0

    def test_weighted_l1_slice_grid_vs_qmc(self):
        L = np.linalg.qr(np.random.default_rng(6).standard_normal((3, 2)))[0]
        tan = TangentData(L_basis=L, Q_eval=lambda s: np.zeros(3))
        n = weighted_l1([1.0, 2.0, 0.5])
        Mg, _ = second_moment(n, tan)
        Mq, se = second_moment(n, tan, method="qmc", qmc_points=2**18, seed=7)
        assert np.allclose(Mg, Mq, atol=max(5 * se, 1e-2) * np.abs(Mg).max())

    def test_positive_definite_with_ellipticity_floor(self):
        rng = np.random.default_rng(8)
        n3 = weighted_l1([1.0, 2.0, 0.5])
        for _ in range(5):
            L = np.linalg.qr(rng.standard_normal((3, 2)))[0]
            tan = TangentData(L_basis=L, Q_eval=lambda s: np.zeros(3))
            M, _ = second_moment(n3, tan)
            floor = ellipticity_floor(n3, tan)
            assert floor > 0
            assert np.linalg.eigvalsh(M).min() >= floor * (1 - 1e-9)
        # euclidean floor is tight
        tan = euclidean_tangent(3, 2)
        M, _ = second_moment(euclidean(), tan)
        assert np.linalg.eigvalsh(M).min() >= ellipticity_floor(euclidean(), tan) - 1e-9


class TestFirstOrder:
    def test_euclidean_zero_vector(self):
        # curved tangent data in R^3 with a nonzero second fundamental form
        L = np.eye(3)[:, :2]

        def Q(s):
            s = np.asarray(s)
            return np.array([0.0, 0.0, s[0] ** 2 + 0.5 * s[1] ** 2 + 0.2 * s[0] * s[1]])

        v = first_order_coeff(euclidean(), TangentData(L_basis=L, Q_eval=Q), tilt_method="c1")
        assert np.allclose(v, 0.0, atol=1e-12)

    def test_circle_value(self):
        v = first_order_coeff(
            weighted_l1(W_DEFAULT), circle_tangent_data(math.pi / 4), tilt_method="slice"
        )
        assert v[0] == pytest.approx(0.036204, abs=2e-6)
        assert v[0] == pytest.approx(
            circle_first_order_coefficient(math.pi / 4, W_DEFAULT), rel=1e-5
        )

    def test_circle_axis_zero(self):
        v = first_order_coeff(
            weighted_l1(W_DEFAULT), circle_tangent_data(math.pi / 2), tilt_method="circle_closed_form"
        )
        assert v[0] == 0.0

    def test_methods_agree_on_circle(self):
        theta = 0.9
        tan = circle_tangent_data(theta)
        n = weighted_l1(W_DEFAULT)
        vals = [
            first_order_coeff(n, tan, tilt_method=m)[0]
            for m in ("c1", "slice", "circle_closed_form")
        ]
        assert vals[0] == pytest.approx(vals[2], rel=1e-10)
        assert vals[1] == pytest.approx(vals[2], rel=1e-5)

    def test_discontinuity_witness_at_axis(self):
        """One-sided limits of the first-order coefficient differ across
        theta = pi/2."""
        eps = 1e-4
        n = weighted_l1(W_DEFAULT)
        left = first_order_coeff(n, circle_tangent_data(math.pi / 2 - eps), tilt_method="c1")[0]
        right = first_order_coeff(n, circle_tangent_data(math.pi / 2 + eps), tilt_method="c1")[0]
        assert abs(left - right) > 0.1
        assert left == pytest.approx(1.5, abs=1e-2)
        assert right == pytest.approx(-1.5, abs=1e-2)


class TestOperator:
    def test_trace_pairing(self):
        coeffs = LimitOperatorCoeffs(
            second_order=(math.pi / 8) * np.eye(2), first_order=np.zeros(2)
        )
        val = apply_limit_operator(coeffs, np.zeros(2), np.eye(2))
        assert val == pytest.approx(math.pi / 4)

    def test_zero_coeffs(self):
        coeffs = LimitOperatorCoeffs(second_order=np.zeros((2, 2)), first_order=np.zeros(2))
        assert apply_limit_operator(coeffs, np.ones(2), np.eye(2)) == 0.0

    def test_circle_trig_poly_value(self):
        theta = math.pi / 4
        fp = math.cos(theta) - 2 * math.sin(2 * theta) - 5 * math.sin(5 * theta)
        fpp = -math.sin(theta) - 4 * math.cos(2 * theta) - 25 * math.cos(5 * theta)
        assert fp == pytest.approx(2.242641, abs=1e-6)
        assert fpp == pytest.approx(16.970563, abs=1e-6)
        coeffs = compute_limit_coeffs(
            weighted_l1(W_DEFAULT), circle_tangent_data(theta), tilt_method="c1"
        )
        val = apply_limit_operator(coeffs, np.array([fp]), np.array([[fpp]]))
        # independent closed-form oracle: 1.1051922656...
        assert val == pytest.approx(1.1051922656, abs=1e-9)
        assert val == pytest.approx(circle_limit_operator(theta, W_DEFAULT, fp, fpp), rel=1e-12)

    def test_circle_closed_form_at_axis(self):
        fpp = -math.sin(math.pi / 2) - 4 * math.cos(math.pi) - 25 * math.cos(5 * math.pi / 2)
        assert fpp == pytest.approx(3.0, abs=1e-12)
        assert circle_limit_operator(math.pi / 2, W_DEFAULT, 123.0, fpp) == pytest.approx(1.0)

    def test_unit_weights_quarter_turn(self):
        val = circle_limit_operator(math.pi / 4, (1.0, 1.0), 10.0, 1.0)
        assert val == pytest.approx(1 / (3 * math.sqrt(2) ** 3))

    def test_shape_validation(self):
        coeffs = LimitOperatorCoeffs(second_order=np.eye(2), first_order=np.zeros(2))
        with pytest.raises(ValueError):
            apply_limit_operator(coeffs, np.zeros(3), np.eye(2))

    def test_euclidean_reduction_on_circle(self):
        """With the Euclidean norm the circle operator is f''/3 pointwise."""
        for theta in np.linspace(0, 2 * math.pi, 17):
            coeffs = compute_limit_coeffs(euclidean(), circle_tangent_data(theta), tilt_method="c1")
            fp, fpp = 0.77, -2.3
            val = apply_limit_operator(coeffs, np.array([fp]), np.array([[fpp]]))
            assert val == pytest.approx(fpp / 3, abs=1e-10)


class TestNonuniform:
    def test_zero_density_gradient(self):
        assert nonuniform_correction(np.array([1.0, 2.0]), np.zeros(2), np.eye(2)) == 0.0

    def test_scalar_case(self):
        assert nonuniform_correction([2.0], [3.0], [[2 / 3]]) == pytest.approx(4.0)

    def test_orthogonal_gradients_isotropic_moment(self):
        g1 = np.array([1.0, 0.0])
        g2 = np.array([0.0, -2.0])
        assert nonuniform_correction(g1, g2, 0.7 * np.eye(2)) == 0.0

    def test_matches_unhalved_second_moment(self):
        tan = euclidean_tangent(3, 2)
        M, _ = second_moment(euclidean(), tan)
        gf, gp = np.array([1.0, 2.0]), np.array([-0.5, 1.0])
        val = nonuniform_correction(gf, gp, 2 * M)
        assert val == pytest.approx(gf @ (2 * M) @ gp)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nonuniform_correction(np.ones(2), np.ones(3), np.eye(2))


class TestTangentData:
    def test_isometry_enforced(self):
        with pytest.raises(ValueError, match="orthonormal"):
            TangentData(L_basis=np.array([[2.0], [0.0]]), Q_eval=lambda s: np.zeros(2))

    def test_curvature_must_be_normal(self):
        tan = TangentData(L_basis=np.eye(2)[:, :1], Q_eval=lambda s: np.array([1.0, 0.0]))
        with pytest.raises(ValueError, match="normal"):
            tan.curvature_vector(np.array([1.0]))

    def test_circle_tangent_data_invariants(self):
        tan = circle_tangent_data(0.77)
        s = np.array([1.0])
        a = tan.embed_direction(s)
        b = tan.curvature_vector(s)
        assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)
        assert abs(a @ b) < 1e-12
        assert np.linalg.norm(b) == pytest.approx(0.5, abs=1e-12)
