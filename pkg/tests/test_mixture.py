"""Tests for the mixture core: densities, responsibilities, and M-steps.

Golden constants were computed with mpmath at 50 significant digits and are
pasted here as float literals.
"""

import math

import numpy as np
import pytest

from gmm_agora.mixture import (
    MixtureParams,
    ball_update_bounds,
    g_j_sigma,
    h_sigma,
    log_component_density,
    logsumexp,
    responsibilities,
    sample_from_gmm,
    update_log_weights,
    update_log_weights_and_covariances,
    update_weights,
    update_weights_and_covariances,
    validate_log_weights,
    validate_weights,
    volume_rescale,
)


def two_component_line(sigma):
    """The scalar benchmark layout: means -1 and +1 on the line."""
    return MixtureParams.isotropic(np.array([[-1.0], [1.0]]), sigma)


class TestMixtureParams:
    def test_isotropic_builds_sigma_squared_identity(self):
        means = np.arange(6.0).reshape(3, 2)
        params = MixtureParams.isotropic(means, 0.4)
        assert params.n == 3 and params.d == 2
        expected = np.broadcast_to(0.16 * np.eye(2), (3, 2, 2))
        np.testing.assert_allclose(params.covariances, expected)
        np.testing.assert_allclose(params.means, means)

    def test_isotropic_sigma_round_trip(self):
        params = MixtureParams.isotropic(np.zeros((4, 3)), 0.27)
        assert params.isotropic_sigma() == pytest.approx(0.27, rel=1e-15)

    def test_isotropic_sigma_none_for_shaped_covariances(self):
        params = two_component_line(0.3)
        shaped = np.array([[[0.09]], [[0.08]]])
        assert params.with_covariances(shaped).isotropic_sigma() is None

    def test_with_covariances_replaces_only_covariances(self):
        params = two_component_line(0.3)
        new = params.with_covariances(np.array([[[0.5]], [[0.25]]]))
        np.testing.assert_array_equal(new.means, params.means)
        np.testing.assert_allclose(new.covariances[:, 0, 0], [0.5, 0.25])
        # the original is untouched
        np.testing.assert_allclose(params.covariances[:, 0, 0], [0.09, 0.09])

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ValueError):
            MixtureParams(np.zeros((2, 1)), np.zeros((3, 1, 1)))
        with pytest.raises(ValueError):
            MixtureParams(np.zeros((2, 1)), np.zeros((2, 2, 2)))

    def test_rejects_asymmetric_covariance(self):
        cov = np.array([[[1.0, 0.5], [0.1, 1.0]]] * 2)
        with pytest.raises(ValueError):
            MixtureParams(np.zeros((2, 2)), cov)

    def test_rejects_non_positive_definite(self):
        cov = np.array([[[1.0, 2.0], [2.0, 1.0]]] * 2)  # eigenvalues 3, -1
        with pytest.raises(ValueError):
            MixtureParams(np.zeros((2, 2)), cov)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            MixtureParams.isotropic(np.zeros((2, 1)), 0.0)


class TestLogsumexp:
    def test_matches_naive_on_moderate_values(self):
        rng = np.random.default_rng(42)
        x = rng.uniform(-5, 5, size=(40, 7))
        naive = np.log(np.sum(np.exp(x), axis=1))
        np.testing.assert_allclose(logsumexp(x, axis=1), naive, rtol=1e-13)

    def test_stable_far_outside_float_range(self):
        x = np.array([1000.0, 1000.0 + math.log(2.0)])
        assert logsumexp(x) == pytest.approx(1000.0 + math.log(3.0), rel=1e-15)
        x = np.array([-1200.0, -1200.0])
        assert logsumexp(x) == pytest.approx(-1200.0 + math.log(2.0), rel=1e-15)

    def test_neg_inf_entries_carry_no_mass(self):
        x = np.array([-np.inf, 0.0, -np.inf])
        assert logsumexp(x) == pytest.approx(0.0, abs=1e-15)
        assert logsumexp(np.array([-np.inf, -np.inf])) == -np.inf


class TestWeightValidation:
    def test_accepts_simplex_and_normalizes_drift(self):
        w = validate_weights([0.25, 0.25, 0.5])
        np.testing.assert_allclose(w, [0.25, 0.25, 0.5])
        validate_weights([0.5 + 4e-10, 0.5])  # inside the tolerance

    def test_rejects_off_simplex(self):
        with pytest.raises(ValueError):
            validate_weights([0.7, 0.7])
        with pytest.raises(ValueError):
            validate_weights([-0.1, 1.1])
        with pytest.raises(ValueError):
            validate_weights([np.nan, 1.0])

    def test_log_weights_allow_exact_zero_mass_entries(self):
        lw = validate_log_weights(np.array([0.0, -np.inf, -np.inf]))
        assert lw[0] == 0.0 and np.isneginf(lw[1])

    def test_log_weights_reject_empty_mass(self):
        with pytest.raises(ValueError):
            validate_log_weights(np.array([-np.inf, -np.inf]))

    def test_log_weights_reject_normalization_drift(self):
        with pytest.raises(ValueError):
            validate_log_weights(np.log([0.6, 0.6]))

    def test_log_weights_clip_positive_jitter_to_zero(self):
        lw = validate_log_weights(np.array([5e-10, -22.0]))
        assert lw[0] == 0.0

    def test_deep_log_weights_survive_where_linear_cannot(self):
        # exp(-5000) underflows to 0.0, so the linear simplex cannot hold it
        lw = validate_log_weights(np.array([0.0, -5000.0]))
        assert lw[1] == -5000.0
        assert np.exp(lw)[1] == 0.0


class TestComponentDensity:
    def test_full_covariance_golden(self):
        mean = np.array([0.5, -1.0, 2.0])
        cov = np.array(
            [[2.0, 0.3, -0.5], [0.3, 1.5, 0.2], [-0.5, 0.2, 1.1]]
        )
        x = np.array([1.0, 0.25, -0.75])
        golden = -8.178708864971317016140783
        assert log_component_density(x, mean, cov) == pytest.approx(
            golden, rel=1e-14
        )

    def test_spherical_matches_hand_formula(self):
        sigma = 0.3
        x, mu = np.array([0.4]), np.array([1.0])
        expected = -0.5 * (
            math.log(2 * math.pi) + 2 * math.log(sigma) + (0.6 / sigma) ** 2
        )
        assert log_component_density(x, mu, np.array([[sigma**2]])) == pytest.approx(
            expected, rel=1e-14
        )


class TestResponsibilities:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(42)
        params = MixtureParams.isotropic(rng.normal(size=(5, 3)), 0.7)
        w = rng.dirichlet(np.ones(5))
        for _ in range(20):
            gamma = responsibilities(rng.normal(size=3), w, params)
            assert gamma.shape == (5,)
            assert gamma.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(gamma >= 0.0)

    def test_zero_weight_component_gets_zero_responsibility(self):
        params = two_component_line(0.5)
        gamma = responsibilities(np.array([0.9]), np.array([0.0, 1.0]), params)
        assert gamma[0] == 0.0 and gamma[1] == 1.0

    def test_g_j_matches_responsibility_entry(self):
        # g is stated for hypercube-vertex means with shared sigma^2 I
        rng = np.random.default_rng(7)
        means = rng.choice([-1.0, 1.0], size=(4, 3))
        params = MixtureParams.isotropic(means, 0.5)
        w = rng.dirichlet(np.ones(4))
        x = rng.normal(size=3)
        gamma = responsibilities(x, w, params)
        for j in range(4):
            assert g_j_sigma(w, j, x, params) == pytest.approx(
                gamma[j], rel=1e-12, abs=1e-300
            )

    def test_g_j_rejects_non_hypercube_means(self):
        params = MixtureParams.isotropic(np.array([[0.0], [2.0]]), 0.5)
        with pytest.raises(ValueError):
            g_j_sigma(np.array([0.5, 0.5]), 0, np.array([0.3]), params)


class TestHSigma:
    def test_golden_value(self):
        golden = 0.1092317725730359280142677
        assert h_sigma(0.25, 0.5, 1.0) == pytest.approx(golden, rel=1e-15)

    def test_matches_g_on_the_two_component_line(self):
        rng = np.random.default_rng(42)
        for sigma in (0.1, 0.3, 1.0):
            params = two_component_line(sigma)
            for _ in range(200):
                w = rng.uniform(1e-6, 1 - 1e-6)
                x = rng.uniform(-2.5, 2.5)
                g = g_j_sigma(np.array([w, 1 - w]), 0, np.array([x]), params)
                assert abs(h_sigma(w, x, sigma) - g) <= 1e-12

    def test_monotone_decreasing_in_x(self):
        x = np.linspace(-4, 4, 200)
        vals = h_sigma(0.4, x, 0.6)
        assert np.all(np.diff(vals) < 0)

    def test_monotone_increasing_in_w(self):
        w = np.linspace(0.001, 0.999, 200)
        vals = h_sigma(w, 0.7, 0.6)
        assert np.all(np.diff(vals) > 0)

    def test_endpoints_are_fixed(self):
        assert h_sigma(0.0, 1.3, 0.2) == 0.0
        assert h_sigma(1.0, -2.0, 0.2) == 1.0

    def test_saturates_without_overflow(self):
        assert h_sigma(0.5, 500.0, 0.1) == 0.0
        assert h_sigma(0.5, -500.0, 0.1) == 1.0


class TestWeightMStep:
    def test_equals_mean_responsibility(self):
        rng = np.random.default_rng(42)
        params = MixtureParams.isotropic(rng.normal(size=(4, 2)), 0.8)
        w = rng.dirichlet(np.ones(4))
        rag = rng.normal(size=(6, 2))
        new_w = update_weights(w, rag, params)
        direct = np.mean([responsibilities(x, w, params) for x in rag], axis=0)
        np.testing.assert_allclose(new_w, direct, rtol=1e-13)
        assert new_w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_two_components_equal_mean_h(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            sigma = rng.uniform(0.05, 1.5)
            params = two_component_line(sigma)
            w = rng.uniform(1e-9, 1 - 1e-9)
            rag = rng.uniform(-3, 3, size=rng.integers(1, 9))
            new_w = update_weights(np.array([w, 1 - w]), rag, params)
            assert abs(new_w[0] - h_sigma(w, rag, sigma).mean()) <= 1e-12

    def test_symmetric_instance_is_a_fixed_point(self):
        params = two_component_line(0.5)
        new_w = update_weights(
            np.array([0.5, 0.5]), np.array([-0.8, 0.8]), params
        )
        np.testing.assert_allclose(new_w, [0.5, 0.5], atol=1e-14)

    def test_unrepresentable_point_raises(self):
        # a RAG point whose squared distance overflows kills every density
        params = two_component_line(0.1)
        with pytest.raises(FloatingPointError):
            update_weights(np.array([0.5, 0.5]), np.array([1e200]), params)


class TestLogWeightMStep:
    def test_agrees_with_linear_map(self):
        rng = np.random.default_rng(42)
        for _ in range(500):
            n, d = int(rng.integers(2, 5)), int(rng.integers(1, 3))
            params = MixtureParams.isotropic(
                rng.normal(size=(n, d)), rng.uniform(0.2, 1.0)
            )
            w = rng.dirichlet(np.ones(n))
            rag = rng.normal(size=(int(rng.integers(1, 7)), d))
            linear = update_weights(w, rag, params)
            logged = np.exp(update_log_weights(np.log(w), rag, params))
            np.testing.assert_allclose(logged, linear, atol=1e-12)

    def test_log_depth_preserved_where_linear_saturates(self):
        # weight mass exp(-800) is invisible to the linear simplex but must
        # regrow once the likelihood advantage (gap^2 / 2 = 1012.5) beats it
        params = MixtureParams.isotropic(np.array([[0.0], [45.0]]), 1.0)
        lw = np.array([0.0, -800.0])
        new_lw = update_log_weights(lw, np.array([45.0]), params)
        assert np.exp(new_lw)[1] > 0.99

    def test_decay_rate_matches_density_ratio(self):
        # one off-component point per update: the abandoned weight decays by
        # the likelihood ratio each sweep instead of snapping to zero
        sigma, gap = 0.5, 2.0
        params = MixtureParams.isotropic(np.array([[0.0], [gap]]), sigma)
        lw = np.log(np.array([0.5, 0.5]))
        for _ in range(3):
            lw = update_log_weights(lw, np.array([0.0]), params)
        # three updates from 0.5: log w2 ~ 3 * (-gap^2 / 2 sigma^2), within
        # the slack of the changing normalizer
        rate = -(gap**2) / (2 * sigma**2)
        assert 3 * rate - 1.0 < lw[1] < 3 * rate + 1.0

    def test_pure_map_keeps_exact_zero_mass_at_zero(self):
        params = MixtureParams.isotropic(np.array([[-1.0], [1.0]]), 0.3)
        lw = np.array([0.0, -np.inf])
        new_lw = update_log_weights(lw, np.array([1.0]), params)
        assert np.isneginf(new_lw[1])

    def test_pseudocount_floors_abandoned_component(self):
        pc = 1e-14
        params = MixtureParams.isotropic(np.array([[-1.0], [1.0]]), 0.3)
        lw = np.array([0.0, -np.inf])
        new_lw = update_log_weights(lw, np.array([-1.0]), params, pseudocount=pc)
        floor = pc / (1.0 + 2.0 * pc)
        assert np.exp(new_lw)[1] == pytest.approx(floor, rel=1e-10)

    def test_pseudocount_lets_floored_weight_rejoin(self):
        pc = 1e-14
        params = MixtureParams.isotropic(np.array([[-1.0], [1.0]]), 0.1)
        lw = np.array([0.0, -np.inf])
        lw = update_log_weights(lw, np.array([-1.0]), params, pseudocount=pc)
        # strong contrary evidence: one point at the dead component's mean
        lw = update_log_weights(lw, np.array([1.0]), params, pseudocount=pc)
        assert np.exp(lw)[1] > 0.99

    def test_rejects_negative_pseudocount(self):
        params = two_component_line(0.3)
        with pytest.raises(ValueError):
            update_log_weights(
                np.log([0.5, 0.5]), np.array([0.0]), params, pseudocount=-1e-9
            )


class TestCovarianceMStep:
    def test_single_component_scatter(self):
        params = MixtureParams.isotropic(np.array([[1.0, 0.0]]), 0.5)
        rag = np.array([[2.0, 1.0], [0.0, -1.0], [1.0, 0.0]])
        new_w, new_covs = update_weights_and_covariances(
            np.array([1.0]), rag, params
        )
        assert new_w[0] == pytest.approx(1.0)
        diff = rag - params.means[0]
        np.testing.assert_allclose(new_covs[0], diff.T @ diff / 3.0, rtol=1e-13)

    def test_weights_match_plain_m_step(self):
        rng = np.random.default_rng(42)
        params = MixtureParams.isotropic(rng.normal(size=(3, 2)), 0.6)
        w = rng.dirichlet(np.ones(3))
        rag = rng.normal(size=(5, 2))
        new_w, _ = update_weights_and_covariances(w, rag, params)
        np.testing.assert_allclose(new_w, update_weights(w, rag, params), rtol=1e-13)

    def test_abandoned_component_keeps_previous_covariance(self):
        params = MixtureParams.isotropic(np.array([[0.0], [80.0]]), 0.5)
        rag = np.array([[0.1], [-0.2]])
        _, new_covs = update_weights_and_covariances(
            np.array([0.5, 0.5]), rag, params
        )
        np.testing.assert_array_equal(new_covs[1], params.covariances[1])

    def test_log_map_agrees_with_linear(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            n, d = int(rng.integers(2, 4)), int(rng.integers(1, 3))
            params = MixtureParams.isotropic(
                rng.normal(size=(n, d)), rng.uniform(0.3, 1.0)
            )
            w = rng.dirichlet(np.ones(n))
            rag = rng.normal(size=(int(rng.integers(2, 6)), d))
            lin_w, lin_c = update_weights_and_covariances(w, rag, params)
            log_w, log_c = update_log_weights_and_covariances(
                np.log(w), rag, params
            )
            np.testing.assert_allclose(np.exp(log_w), lin_w, atol=1e-12)
            np.testing.assert_allclose(log_c, lin_c, atol=1e-10)

    def test_ridge_is_added_everywhere(self):
        params = MixtureParams.isotropic(np.array([[0.0], [1.0]]), 0.4)
        _, base = update_log_weights_and_covariances(
            np.log([0.5, 0.5]), np.array([[0.2], [0.6]]), params
        )
        _, ridged = update_log_weights_and_covariances(
            np.log([0.5, 0.5]), np.array([[0.2], [0.6]]), params, ridge=1e-3
        )
        np.testing.assert_allclose(ridged, base + 1e-3 * np.eye(1), rtol=1e-12)

    def test_pseudocount_starves_abandoned_covariance_to_ridge(self):
        # no responsibility mass: scatter/(0 + pc) ~ 0, plus the ridge floor
        params = MixtureParams.isotropic(np.array([[0.0], [80.0]]), 0.5)
        _, covs = update_log_weights_and_covariances(
            np.log([0.5, 0.5]),
            np.array([[0.1], [-0.2]]),
            params,
            pseudocount=1e-14,
            ridge=1e-6,
        )
        np.testing.assert_allclose(covs[1], 1e-6 * np.eye(1), atol=1e-12)
        # the attended component is unaffected by the floor at this scale
        assert covs[0, 0, 0] > 1e-3


class TestVolumeRescale:
    def test_hits_target_determinant(self):
        rng = np.random.default_rng(42)
        a = rng.normal(size=(3, 3))
        cov = a @ a.T + 3 * np.eye(3)
        out = volume_rescale(cov, 2.5)
        assert np.linalg.det(out) == pytest.approx(2.5, rel=1e-12)
        # shape is preserved: the rescale is a scalar multiple
        ratio = out / cov
        np.testing.assert_allclose(ratio, ratio[0, 0], rtol=1e-12)

    def test_stack_form(self):
        covs = np.stack([np.eye(2), 4.0 * np.eye(2)])
        out = volume_rescale(covs, 1.0)
        np.testing.assert_allclose(np.linalg.det(out), [1.0, 1.0], rtol=1e-12)

    def test_degenerate_matrix_raises(self):
        with pytest.raises(FloatingPointError):
            volume_rescale(np.zeros((2, 2)), 1.0)

    def test_bad_target_raises(self):
        with pytest.raises(ValueError):
            volume_rescale(np.eye(2), 0.0)


class TestBallUpdateBounds:
    def test_golden_instance(self):
        low, high = ball_update_bounds(
            np.array([0.3, 0.45, 0.25]), 0, 0.35, 0.4
        )
        assert low == pytest.approx(0.9998701006209839960009538, rel=1e-14)
        assert high == pytest.approx(0.9999999998562443627530731, rel=1e-14)

    def test_sandwich_on_nearest_vertex_configurations(self):
        # means on hypercube corners, every non-focal mean one sign flip away
        rng = np.random.default_rng(42)
        d = 4
        for _ in range(300):
            m = int(rng.integers(2, 6))
            center = rng.choice([-1.0, 1.0], size=d)
            means = np.tile(center, (m, 1))
            for row, f in enumerate(rng.choice(d, size=m - 1, replace=False), 1):
                means[row, f] *= -1.0
            sigma = rng.uniform(0.15, 1.0)
            params = MixtureParams.isotropic(means, sigma)
            w = rng.dirichlet(np.ones(m))
            radius = rng.uniform(0.05, 0.5)
            dirs = rng.standard_normal((3, d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            rag = center + dirs * (radius * rng.random(3) ** (1 / d))[:, None]
            new_w = update_weights(w, rag, params)[0]
            low, high = ball_update_bounds(w, 0, sigma, radius)
            assert low - 1e-12 <= new_w <= high + 1e-12

    def test_upper_bound_needs_nearest_vertices(self):
        # antipodal corners sit at squared distance 8, not 4; the extra
        # distance inflates the true posterior above the nearest-vertex
        # bound, which is why the bound is documented as nearest-vertex only
        means = np.array([[1.0, 1.0], [-1.0, -1.0]])
        params = MixtureParams.isotropic(means, 1.0)
        w = np.array([0.5, 0.5])
        new_w = update_weights(w, means[0].reshape(1, 2), params)[0]
        _, high = ball_update_bounds(w, 0, 1.0, 0.0)
        assert new_w > high

    def test_degenerate_cases(self):
        assert ball_update_bounds(np.array([1.0]), 0, 0.3, 0.2) == (1.0, 1.0)
        assert ball_update_bounds(np.array([0.0, 1.0]), 0, 0.3, 0.2) == (0.0, 0.0)
        assert ball_update_bounds(np.array([0.0, 1.0]), 1, 0.3, 0.2) == (1.0, 1.0)

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            ball_update_bounds(np.array([0.5, 0.5]), 0, 0.3, 0.6)


class TestSampling:
    def test_shapes_and_determinism(self):
        params = MixtureParams.isotropic(np.array([[0.0, 0.0], [5.0, 5.0]]), 0.2)
        draws_a = sample_from_gmm(
            np.array([0.5, 0.5]), params, 8, np.random.default_rng(11)
        )
        draws_b = sample_from_gmm(
            np.array([0.5, 0.5]), params, 8, np.random.default_rng(11)
        )
        assert draws_a.shape == (8, 2)
        np.testing.assert_array_equal(draws_a, draws_b)

    def test_one_hot_weights_pin_the_component(self):
        params = MixtureParams.isotropic(np.array([[0.0], [100.0]]), 0.1)
        draws = sample_from_gmm(
            np.array([0.0, 1.0]), params, 50, np.random.default_rng(3)
        )
        assert np.all(np.abs(draws - 100.0) < 1.0)

    def test_component_frequencies_follow_weights(self):
        params = MixtureParams.isotropic(np.array([[0.0], [100.0]]), 0.1)
        draws = sample_from_gmm(
            np.array([0.25, 0.75]), params, 4000, np.random.default_rng(5)
        )
        frac_high = float(np.mean(draws > 50.0))
        assert abs(frac_high - 0.75) < 0.03
