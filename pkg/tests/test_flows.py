import numpy as np
import pytest

from aronsson_lab import (
    affine_map,
    embedded_scalar_map,
    euclidean_hamiltonian,
    exp_diff_map,
    horizontal_flow,
    k_profile,
    phase_split,
    quadratic_map,
    rank_one_map,
    scalar_aronsson_map,
    svd_projections,
    tangential_flow,
    trajectory_identities,
    vertical_residual_at,
    vertical_system_residual,
)
from aronsson_lab.errors import StartInVerticalSet, StartOutsideXi

from conftest import random_jet


class TestTangentialFlow:
    def test_affine_closed_form(self):
        A = np.array([[0.8, -0.3], [0.2, 0.5]])
        fam = affine_map(A, half_width=10.0)
        xi = np.array([0.6, 0.8])
        x0 = np.array([0.1, -0.2])
        trace = tangential_flow(fam, x0, xi, t_end=1.0, step=1e-2)
        for t, p in zip(trace.times, trace.points):
            np.testing.assert_allclose(p, x0 + t * (A.T @ xi), atol=1e-10)

    def test_exp_diff_invariants(self):
        fam = exp_diff_map()
        trace = tangential_flow(fam, [0.2, 0.1], [1.0, 0.0], t_end=1.0, step=1e-3)
        assert trace.exit_reason == "t_end"
        gn = trace.monitors["grad_norm"]
        assert np.max(np.abs(gn - np.sqrt(2.0))) <= 1e-6
        increments = np.diff(trace.monitors["xi_dot_u"])
        assert np.min(increments) >= -1e-9

    def test_start_outside_xi_rejected(self):
        fam = exp_diff_map()
        # xi^T Du = (-sin x, sin y) vanishes at the origin for xi = e1
        with pytest.raises(StartOutsideXi):
            tangential_flow(fam, [0.0, 0.0], [1.0, 0.0], t_end=1.0, step=1e-3)

    def test_boundary_exit_flagged(self):
        fam = affine_map(np.eye(2), half_width=1.0)
        trace = tangential_flow(fam, [0.9, 0.0], [1.0, 0.0], t_end=5.0, step=1e-2)
        assert trace.exit_reason == "boundary"
        assert np.all(np.abs(trace.points) <= 1.0)
        assert trace.times[-1] < 5.0

    def test_conservation_is_fourth_order_in_step(self):
        # scalar Aronsson solution: |Du| is conserved along the flow but
        # varies in space, so the drift shows the integrator order
        fam = scalar_aronsson_map(1.0, -1.0)
        drifts = {}
        for step in (0.02, 0.01):
            trace = tangential_flow(fam, (0.9, 0.9), [1.0], t_end=0.5, step=step)
            gn = trace.monitors["grad_norm"]
            drifts[step] = np.max(np.abs(gn - gn[0]))
        assert 12.0 <= drifts[0.02] / drifts[0.01] <= 20.0

    def test_monotonicity_increment_floor(self):
        fam = scalar_aronsson_map(1.0, -1.0)
        step = 1e-2
        trace = tangential_flow(fam, (0.9, 0.9), [1.0], t_end=0.5, step=step)
        assert np.min(np.diff(trace.monitors["xi_dot_u"])) >= -10.0 * step**3


class TestTrajectoryIdentities:
    def test_exp_diff_discrepancies_shrink_quadratically(self):
        fam = exp_diff_map()
        xi = np.array([1.0, 0.0])
        eta = np.array([0.4, np.sqrt(1 - 0.16)])
        errs = {}
        for step in (1e-3, 5e-4):
            trace = tangential_flow(fam, [0.2, 0.1], xi, t_end=0.5, step=step)
            report = trajectory_identities(trace, fam, xi, eta)
            errs[step] = (report.first_derivative_max_error,
                          report.second_derivative_max_error)
        assert errs[1e-3][0] <= 1e-6
        assert errs[1e-3][1] <= 1e-4
        assert errs[1e-3][1] / errs[5e-4][1] >= 3.5

    def test_affine_both_sides_vanish(self):
        fam = affine_map(np.array([[0.8, -0.3], [0.2, 0.5]]), half_width=10.0)
        xi = np.array([0.6, 0.8])
        trace = tangential_flow(fam, [0.0, 0.0], xi, t_end=0.5, step=1e-2)
        report = trajectory_identities(trace, fam, xi, xi)
        assert report.second_derivative_max_error <= 1e-10

    def test_curvature_identity_matches_scalar_inf_laplacian(self):
        # for eta = xi the closed form is 2 * Delta_inf(xi^T u)
        fam = exp_diff_map()
        xi = np.array([0.6, 0.8])
        trace = tangential_flow(fam, [0.3, -0.4], xi, t_end=0.2, step=1e-3)
        report = trajectory_identities(trace, fam, xi, xi)
        assert report.second_derivative_max_error <= 1e-4


class TestPhaseSplit:
    def test_full_rank_vertical_vanishes(self):
        H = euclidean_hamiltonian(2, 2)
        fam = exp_diff_map()
        split = phase_split(H, fam.jet((0.3, -0.9)), np.array([0.6, 0.8]))
        np.testing.assert_allclose(split.vertical, 0.0, atol=1e-12)
        np.testing.assert_allclose(split.horizontal, [0.6, 0.8], atol=1e-12)
        assert split.in_horizontal_set and not split.in_vertical_set

    def test_embedded_scalar_vertical_direction(self):
        H = euclidean_hamiltonian(2, 2)
        fam = embedded_scalar_map()
        split = phase_split(H, fam.jet((0.7, 0.9)), np.array([0.0, 1.0]))
        np.testing.assert_allclose(split.horizontal, 0.0, atol=1e-14)
        np.testing.assert_allclose(split.vertical, [0.0, 1.0], atol=1e-14)
        assert split.in_vertical_set and not split.in_horizontal_set

    def test_rank_one_closed_form(self, rng):
        H = euclidean_hamiltonian(3, 2)
        for _ in range(10):
            eta = rng.standard_normal(3)
            eta /= np.linalg.norm(eta)
            q = rng.standard_normal(2)
            jet = random_jet(rng, 3, 2)
            jet = type(jet)(point=jet.point, value=jet.value,
                            grad=np.outer(eta, q), hess=jet.hess)
            e = rng.standard_normal(3)
            e /= np.linalg.norm(e)
            split = phase_split(H, jet, e)
            coef = float(eta @ e)
            np.testing.assert_allclose(split.horizontal, coef * eta, atol=1e-12)
            np.testing.assert_allclose(split.vertical, e - coef * eta, atol=1e-12)

    def test_orthogonality_and_reconstruction(self, rng):
        for _ in range(50):
            N, n = rng.integers(1, 4), rng.integers(1, 4)
            H = euclidean_hamiltonian(N, n)
            jet = random_jet(rng, N, n)
            e = rng.standard_normal(N)
            e /= np.linalg.norm(e)
            split = phase_split(H, jet, e)
            assert abs(float(split.horizontal @ split.vertical)) <= 1e-12
            np.testing.assert_allclose(split.horizontal + split.vertical, e, atol=1e-12)


class TestHorizontalFlow:
    def test_embedded_scalar_conserves_hamiltonian(self):
        H = euclidean_hamiltonian(2, 2)
        fam = embedded_scalar_map()
        trace = horizontal_flow(H, fam, (0.9, 0.9), np.array([1.0, 0.0]),
                                t_end=0.5, step=1e-3)
        assert trace.exit_reason == "t_end"
        ham = trace.monitors["hamiltonian"]
        assert np.max(np.abs(ham - ham[0])) <= 1e-5
        assert np.all(trace.monitors["rank"] == 1.0)

    def test_constant_gradient_straight_line(self):
        H = euclidean_hamiltonian(2, 2)
        A = np.array([[1.0, 0.5], [0.0, 1.0]])
        fam = affine_map(A, half_width=20.0)
        trace = horizontal_flow(H, fam, (0.0, 0.0), np.array([1.0, 0.0]),
                                t_end=1.0, step=1e-2)
        ham = trace.monitors["hamiltonian"]
        np.testing.assert_allclose(ham, ham[0], atol=1e-12)
        velocity = A.T @ np.array([1.0, 0.0])
        for t, p in zip(trace.times, trace.points):
            np.testing.assert_allclose(p, t * velocity, atol=1e-10)

    def test_exp_diff_exact_conservation(self):
        # rank 2, v = 0, h = e, and 1/2 |Du|^2 = 1 identically
        H = euclidean_hamiltonian(2, 2)
        fam = exp_diff_map()
        trace = horizontal_flow(H, fam, (0.2, 0.4), np.array([0.6, 0.8]),
                                t_end=0.5, step=1e-2)
        np.testing.assert_allclose(trace.monitors["hamiltonian"], 1.0, atol=1e-12)

    def test_monotone_pairing_dominates_omega(self):
        # for the Euclidean Hamiltonian the pairing equals omega exactly
        H = euclidean_hamiltonian(2, 2)
        fam = embedded_scalar_map()
        trace = horizontal_flow(H, fam, (0.9, 0.9), np.array([1.0, 0.0]),
                                t_end=0.5, step=1e-2)
        gap = trace.monitors["monotone_pairing"] - trace.monitors["omega"]
        assert np.min(gap) >= -1e-8

    def test_vertical_start_rejected(self):
        H = euclidean_hamiltonian(2, 2)
        fam = embedded_scalar_map()
        with pytest.raises(StartInVerticalSet):
            horizontal_flow(H, fam, (0.9, 0.9), np.array([0.0, 1.0]),
                            t_end=0.5, step=1e-2)

    def test_rank_jump_terminates_trace(self):
        # u = (-x^2/2, y): singular values (|x|, 1); with a coarse rank
        # tolerance the flow from x = 0.6 drifts into the rank-1 band
        H = euclidean_hamiltonian(2, 2)
        fam = quadratic_map([[0.0, 0.0], [0.0, 1.0]],
                            [[[-1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
                            half_width=5.0)
        trace = horizontal_flow(H, fam, (0.6, 0.0), np.array([1.0, 0.0]),
                                t_end=2.0, step=1e-2, rank_tol=0.5)
        assert trace.exit_reason == "rank_jump"
        assert trace.points[-1][0] > 0.45


class TestVerticalSystem:
    def test_embedded_scalar_residuals_vanish(self, rng):
        H = euclidean_hamiltonian(2, 2)
        fam = embedded_scalar_map()
        count = 0
        while count < 20:
            x = fam.domain.sample(1, rng)[0]
            if fam.smooth_distance(x) < 0.1:
                continue
            count += 1
            res = vertical_residual_at(H, fam, x, np.array([0.0, 1.0]))
            assert res.applicable
            np.testing.assert_allclose(res.r1, 0.0, atol=1e-8)
            assert abs(res.r2) <= 1e-8

    def test_exp_diff_not_applicable(self):
        H = euclidean_hamiltonian(2, 2)
        fam = exp_diff_map()
        res = vertical_residual_at(H, fam, (0.3, -0.9), np.array([0.6, 0.8]))
        assert not res.applicable

    def test_rank_one_orthogonal_direction(self, rng):
        eta = np.array([0.6, 0.8])
        fam = rank_one_map(eta, [1.0, 0.2], [-0.4, 1.0], k_profile("smooth-sine", 0.8))
        H = euclidean_hamiltonian(2, 2)
        perp = np.array([-0.8, 0.6])
        for x in fam.domain.sample(10, rng, margin=0.2):
            jet = fam.jet(x)
            split = phase_split(H, jet, perp)
            res = vertical_system_residual(H, jet, split.vertical, np.zeros((2, 2)))
            assert res.applicable
            np.testing.assert_allclose(res.r1, 0.0, atol=1e-12)
            assert res.r2 == 0.0
