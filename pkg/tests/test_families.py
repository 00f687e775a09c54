import math

import numpy as np
import pytest

from aronsson_lab import (
    affine_map,
    constant_map,
    curve_map,
    embedded_scalar_map,
    exp_diff_map,
    exp_sum_map,
    family_from_config,
    fd_jet,
    inf_laplacian,
    interface_locus,
    k_integral_map,
    k_profile,
    quadratic_map,
    rank_one_map,
    scalar_aronsson_map,
    segment_flat_hamiltonian,
    separable_map,
    svd_projections,
)
from aronsson_lab.errors import (
    ConfigError,
    DomainMargin,
    NonSmoothPoint,
    UnitSpeedViolation,
)
from aronsson_lab.families import hessian_blowup_diagnostic, profile_from_config


ALL_SMOOTH_FAMILIES = [
    exp_diff_map(),
    exp_sum_map(),
    curve_map("circle"),
    scalar_aronsson_map(1.0, -1.0),
    scalar_aronsson_map(1.0, 1.0),
    embedded_scalar_map(),
    k_integral_map(k_profile("smooth-sine", 0.7)),
    rank_one_map([0.6, 0.8], [1.0, 0.2], [-0.4, 1.0], k_profile("smooth-sine", 0.8)),
    quadratic_map([[0.3, -1.1], [0.7, 0.2]],
                  [[[0.5, 0.1], [0.1, -0.4]], [[0.0, 0.9], [0.9, 0.3]]]),
]


def smooth_interior_points(family, rng, count, margin):
    pts = []
    while len(pts) < count:
        for p in family.domain.sample(count, rng, margin):
            if family.smooth_distance(p) >= margin:
                pts.append(p)
                if len(pts) == count:
                    break
    return np.array(pts)


class TestJetValidation:
    @pytest.mark.parametrize("family", ALL_SMOOTH_FAMILIES, ids=lambda f: f.name)
    def test_analytic_jets_match_fd_oracle(self, family, rng):
        points = smooth_interior_points(family, rng, 25, margin=0.2)
        h = 1e-4
        for x in points:
            jet = family.jet(x)
            oracle = fd_jet(family, x, h)
            np.testing.assert_allclose(jet.value, oracle.value, atol=1e-12)
            np.testing.assert_allclose(jet.grad, oracle.grad, atol=1e-6)
            np.testing.assert_allclose(jet.hess, oracle.hess, atol=1e-4)

    def test_fd_gradient_convergence_factor(self, rng):
        # halving h cuts the gradient error by ~4 (second order)
        fam = exp_diff_map()
        points = fam.domain.sample(40, rng, margin=0.2)
        factors = []
        for h in (2e-3, 1e-3):
            err = 0.0
            for x in points:
                err = max(err, float(np.max(np.abs(fd_jet(fam, x, h).grad - fam.jet(x).grad))))
            factors.append(err)
        assert 3.6 <= factors[0] / factors[1] <= 4.4

    def test_affine_family_fd_exact(self, rng):
        # zero truncation error, so a wide stencil leaves only roundoff
        fam = affine_map([[1.0, 2.0], [0.5, -1.0]], offset=[0.3, 0.1])
        for x in fam.domain.sample(5, rng, margin=0.2):
            oracle = fd_jet(fam, x, 5e-2)
            np.testing.assert_allclose(oracle.grad, fam.grad(x), atol=1e-13)
            np.testing.assert_allclose(oracle.hess, 0.0, atol=1e-12)

    def test_stencil_domain_margin_enforced(self):
        fam = exp_diff_map()
        corner = np.array([math.pi / 2, math.pi / 2 - 1e-6])
        with pytest.raises(DomainMargin):
            fd_jet(fam, corner, 1e-3)


class TestSeparable:
    def test_exp_diff_structure(self, rng):
        fam = exp_diff_map()
        for p in fam.domain.sample(200, rng, margin=0.05):
            rank = svd_projections(fam.grad(p)).rank
            if abs(p[0] - p[1]) > 1e-6:
                assert rank == 2
        for t in rng.uniform(-1.0, 1.0, size=20):
            pair = svd_projections(fam.grad((t, t)))
            assert pair.rank == 1
            assert np.linalg.norm(fam.grad((t, t))) > 1.0  # never vanishes

    def test_affine_factors_give_zero_hessian(self, rng):
        fam = separable_map({"kind": "affine", "direction": [0.6, 0.8]},
                            {"kind": "affine", "direction": [0.0, 1.0]})
        for p in fam.domain.sample(5, rng, margin=0.1):
            jet = fam.jet(p)
            np.testing.assert_array_equal(jet.hess, 0.0)
            np.testing.assert_allclose(inf_laplacian(jet).value, 0.0, atol=1e-14)

    def test_sum_map_normal_term_survives(self):
        fam = exp_sum_map()
        report = inf_laplacian(fam.jet((0.7, 0.7)))
        assert np.linalg.norm(report.value) > 0.1


class TestInterfaceLocus:
    def test_exp_diff_locus_is_diagonal(self):
        fam = exp_diff_map()
        report = interface_locus(fam, counts=81, tol=1e-6, margin=0.1)
        assert report.points.shape[0] > 10
        assert np.max(np.abs(report.points[:, 0] - report.points[:, 1])) <= 2e-3
        assert np.all(report.ranks == 1)

    def test_affine_factors_everywhere_colinear(self):
        xi = [0.6, 0.8]
        fam = separable_map({"kind": "affine", "direction": xi},
                            {"kind": "affine", "direction": xi})
        report = interface_locus(fam, counts=11, tol=1e-12)
        assert report.points.shape[0] == 121

    def test_speed_mismatch_rejected(self):
        fam = separable_map({"kind": "affine", "direction": [2.0, 0.0]}, "circle")
        with pytest.raises(UnitSpeedViolation):
            interface_locus(fam, counts=11, tol=1e-3)

    def test_two_speed_circles_against_root_oracle(self):
        # f = circle, g = half-radius double-speed circle: tangent dot is
        # cos(x - 2y); the locus must match the roots of |cos| = 1 found by
        # bisection of sin(x - 2y) along grid lines
        fam = separable_map("circle", "circle-2")
        tol = 1e-4
        report = interface_locus(fam, counts=301, tol=tol)
        assert report.points.shape[0] > 0
        band = math.acos(1.0 - tol)
        for x, y in report.points:
            theta = x - 2.0 * y
            roots = []
            for k in range(-3, 4):
                root = k * math.pi
                lo, hi = root - 0.5, root + 0.5

                def f(t):
                    return math.sin(t)

                # bisection on sin, whose zeros are the |cos| = 1 points
                a, b = lo, hi
                if f(a) * f(b) < 0:
                    for _ in range(80):
                        mid = 0.5 * (a + b)
                        if f(a) * f(mid) <= 0:
                            b = mid
                        else:
                            a = mid
                    roots.append(0.5 * (a + b))
            assert roots and min(abs(theta - r) for r in roots) <= band + 1e-12


class TestKProfiles:
    @pytest.mark.parametrize("config", [
        {"kind": "constant", "bound": 0.3},
        {"kind": "smooth-sine", "bound": 0.7},
        {"kind": "piecewise-linear", "bound": 0.6},
        {"kind": "weierstrass-truncated", "bound": 0.7},
    ])
    def test_sup_bound_holds(self, config):
        profile = profile_from_config(config)
        assert profile.sup_margin(10_000) >= -1e-12

    @pytest.mark.parametrize("kind,bound,params", [
        ("smooth-sine", 0.7, {}), ("piecewise-linear", 0.6, {}),
        # low truncation order keeps the FD truncation error measurable
        ("weierstrass-truncated", 0.7, {"order": 4}),
    ])
    def test_antiderivative_consistent_with_value(self, kind, bound, params, rng):
        profile = k_profile(kind, bound, **params)
        for t in rng.uniform(-5.0, 5.0, size=30):
            h = 1e-5
            if not (profile.smooth_at(t + h) and profile.smooth_at(t - h)):
                continue
            fd = (profile.antiderivative(t + h) - profile.antiderivative(t - h)) / (2 * h)
            assert fd == pytest.approx(float(profile.value(t)), abs=1e-7)

    def test_triangle_kinks_flagged(self):
        profile = k_profile("piecewise-linear", 0.5)
        assert not profile.smooth_at(1.0)
        assert not profile.smooth_at(-3.0)
        assert profile.smooth_at(0.4)


class TestKIntegralMap:
    def test_constant_profile_is_affine(self, rng):
        fam = k_integral_map(k_profile("constant", 0.0))
        for p in fam.domain.sample(5, rng, margin=0.1):
            jet = fam.jet(p)
            np.testing.assert_array_equal(jet.hess, 0.0)
            np.testing.assert_allclose(inf_laplacian(jet).value, 0.0, atol=1e-13)
            np.testing.assert_allclose(jet.grad, [[1.0, 0.0], [0.0, 1.0]], atol=1e-14)

    def test_rank_two_and_constant_speed(self, rng):
        fam = k_integral_map(k_profile("smooth-sine", 0.7))
        for p in fam.domain.sample(200, rng):
            Du = fam.grad(p)
            assert abs(float(np.sum(Du * Du)) - 2.0) <= 1e-12
            assert svd_projections(Du).rank == 2
            dot = float(Du[:, 0] @ Du[:, 1])
            assert abs(dot) < 1.0  # nowhere colinear for bound < pi/4

    def test_bound_warning(self):
        with pytest.warns(UserWarning):
            k_integral_map(k_profile("smooth-sine", 1.0))

    def test_weierstrass_certifies_first_order_only(self):
        fam = k_integral_map(k_profile("weierstrass-truncated", 0.7))
        assert fam.jet_order == 1
        with pytest.raises(NonSmoothPoint):
            fam.jet((0.1, 0.2))
        Du = fam.grad((0.1, 0.2))
        assert abs(float(np.sum(Du * Du)) - 2.0) <= 1e-12

    def test_fd_hessian_blowup_diagnostic(self):
        rows = hessian_blowup_diagnostic(orders=(2, 5, 8))
        values = [row["max_fd_hessian"] for row in rows]
        assert values[-1] > 10.0 * values[0]


class TestRankOneMap:
    eta = np.array([0.0, 1.0])
    a = np.array([1.0, 0.0, 0.5])
    b = np.array([0.0, 1.0, -0.5])

    def test_constant_profile_affine(self, rng):
        fam = rank_one_map(self.eta, self.a, self.b, k_profile("constant", 0.0))
        mid = np.outer(self.eta, 0.5 * (self.a + self.b))
        for x in fam.domain.sample(5, rng, margin=0.1):
            np.testing.assert_allclose(fam.grad(x), mid, atol=1e-14)

    def test_combination_coefficient_in_unit_interval(self, rng):
        fam = rank_one_map(self.eta, self.a, self.b, k_profile("smooth-sine", 0.8))
        lam = fam.extras["lambda"]
        for x in fam.domain.sample(500, rng):
            val = lam(x)
            assert 0.0 < val < 1.0

    def test_gradient_stays_on_segment(self, rng):
        fam = rank_one_map(self.eta, self.a, self.b, k_profile("smooth-sine", 0.8))
        H = segment_flat_hamiltonian(self.eta, self.a, self.b)
        for x in fam.domain.sample(1000, rng):
            Du = fam.grad(x)
            assert H.value(Du) <= 1e-12
            assert float(np.linalg.norm(H.grad(Du))) <= 1e-12

    def test_large_bound_rejected(self):
        with pytest.raises(ValueError):
            rank_one_map(self.eta, self.a, self.b, k_profile("smooth-sine", 1.0))


class TestScalarAronsson:
    def test_harmonic_pair_off_axes(self, rng):
        fam = scalar_aronsson_map(1.0, -1.0)
        count = 0
        while count < 100:
            p = fam.domain.sample(1, rng)[0]
            if min(abs(p[0]), abs(p[1])) < 0.05:
                continue
            count += 1
            np.testing.assert_allclose(inf_laplacian(fam.jet(p)).value, 0.0, atol=1e-8)

    def test_plus_variant_not_harmonic(self):
        fam = scalar_aronsson_map(1.0, 1.0)
        value = inf_laplacian(fam.jet((1.0, 1.0))).value
        assert abs(value[0]) > 1e-3
        assert value[0] == pytest.approx(128.0 / 81.0, rel=1e-12)

    def test_scalar_oracle_match(self):
        fam = scalar_aronsson_map(1.0, -1.0)
        jet = fam.jet((1.0, 1.0))
        oracle = 0.0
        for i in range(2):
            for j in range(2):
                oracle += jet.grad[0, i] * jet.grad[0, j] * jet.hess[0, i, j]
        np.testing.assert_allclose(inf_laplacian(jet).value, [oracle], atol=1e-12)

    def test_axis_hessian_raises(self):
        fam = scalar_aronsson_map(1.0, -1.0)
        with pytest.raises(NonSmoothPoint):
            fam.jet((0.0, 1.0))
        # the gradient itself extends continuously to the axes
        np.testing.assert_allclose(fam.grad((0.0, 1.0)), [[0.0, -4.0 / 3.0]], atol=1e-14)


class TestRegistry:
    @pytest.mark.parametrize("name", [
        "exp-diff", "exp-sum", "circle-curve", "saddle",
        "aronsson-minus", "aronsson-plus", "aronsson-embedded", "k-integral",
    ])
    def test_named_families(self, name):
        fam = family_from_config(name)
        x = fam.domain.sample(1, np.random.default_rng(0), margin=0.3)[0]
        assert fam.value(x).shape == (fam.N,)

    def test_parametrized_families(self):
        fam = family_from_config({"family": "constant", "values": [1.0, 0.0], "n": 1})
        np.testing.assert_array_equal(fam.value([0.3]), [1.0, 0.0])
        fam = family_from_config({"family": "rank-one", "eta": [1.0, 0.0],
                                  "a": [1.0, 0.0], "b": [0.0, 1.0]})
        assert fam.N == 2 and fam.n == 2

    def test_unknown_family_rejected(self):
        with pytest.raises(ConfigError):
            family_from_config("moebius")
