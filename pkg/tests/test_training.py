import numpy as np
import pytest

from hmmkld import (
    EmConfig,
    GaussianEmission,
    HmmModel,
    ModelError,
    ObservationSequence,
    canonical_state_order,
    em_fit,
    forward_backward,
    kmeans_1d,
    reorder_states,
    sample,
)


class TestKmeans1d:
    def test_separated_pairs(self):
        assign, means = kmeans_1d([0.0, 0.0, 10.0, 10.0], 2, seed=0)
        np.testing.assert_allclose(means, [0.0, 10.0])
        assert assign.tolist() == [0, 0, 1, 1]

    def test_single_cluster_is_mean(self):
        values = [1.0, 2.0, 4.0]
        _, means = kmeans_1d(values, 1, seed=0)
        assert means[0] == pytest.approx(np.mean(values))

    def test_means_sorted_ascending(self):
        rng = np.random.default_rng(5)
        values = np.concatenate([rng.normal(c, 0.1, 20) for c in (3.0, -2.0, 0.5)])
        _, means = kmeans_1d(values, 3, seed=1)
        assert np.all(np.diff(means) > 0)

    def test_recovers_separated_gaussians(self):
        rng = np.random.default_rng(42)
        centers = [-5.0, 0.0, 5.0]
        sigma = 0.5
        per_cluster = 100
        values = np.concatenate(
            [rng.normal(c, sigma, per_cluster) for c in centers]
        )
        _, means = kmeans_1d(values, 3, seed=7)
        tol = 3 * sigma / np.sqrt(per_cluster)
        np.testing.assert_allclose(means, centers, atol=tol)

    def test_too_many_clusters(self):
        with pytest.raises(ModelError):
            kmeans_1d([1.0, 1.0, 2.0], 3, seed=0)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        values = rng.normal(0, 1, 50)
        a1, m1 = kmeans_1d(values, 4, seed=9)
        a2, m2 = kmeans_1d(values, 4, seed=9)
        assert np.array_equal(a1, a2)
        np.testing.assert_array_equal(m1, m2)


class TestEmFit:
    def test_single_state_closed_form(self):
        rng = np.random.default_rng(0)
        values = rng.normal(1.5, 0.4, 100)
        obs = ObservationSequence(values)
        cfg = EmConfig(num_states=1, num_restarts=1, seed=0)
        result = em_fit(obs, cfg)
        em = result.model.emission
        assert em.means[0] == pytest.approx(values.mean(), abs=1e-9)
        assert em.sigmas[0] == pytest.approx(values.std(), abs=1e-9)
        assert result.converged

    def test_two_state_parameter_recovery(self):
        true = HmmModel(
            [0.5, 0.5],
            [[0.9, 0.1], [0.1, 0.9]],
            GaussianEmission.homoscedastic([-1.0, 1.0], 0.5),
        )
        _, obs = sample(true, 2000, seed=17)
        cfg = EmConfig(
            num_states=2,
            tie_transitions=True,
            homoscedastic=True,
            num_restarts=5,
            seed=4,
        )
        result = em_fit(obs, cfg)
        model = reorder_states(result.model, canonical_state_order(result.model))
        np.testing.assert_allclose(model.emission.means, [-1.0, 1.0], atol=0.05)
        assert model.emission.sigmas[0] == pytest.approx(0.5, abs=0.02)
        eta = 1.0 - model.transition[0, 0]
        assert eta == pytest.approx(0.1, abs=0.03)

    def test_log_likelihood_monotone(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            values = np.concatenate(
                [rng.normal(-1, 0.5, 40), rng.normal(1, 0.5, 40)]
            )
            rng.shuffle(values)
            cfg = EmConfig(
                num_states=2,
                tie_transitions=bool(trial % 2),
                homoscedastic=bool(trial % 3),
                num_restarts=2,
                seed=trial,
            )
            result = em_fit(ObservationSequence(values), cfg)
            diffs = np.diff(result.log_likelihoods)
            assert np.all(diffs >= -1e-9)

    def test_tied_transition_structure(self):
        rng = np.random.default_rng(2)
        values = rng.normal(0, 1, 120)
        cfg = EmConfig(num_states=3, tie_transitions=True, num_restarts=2, seed=1)
        model = em_fit(ObservationSequence(values), cfg).model
        t = model.transition
        assert t[0, 0] == pytest.approx(t[1, 1], abs=1e-12)
        assert t[0, 1] == pytest.approx(t[0, 2], abs=1e-12)
        np.testing.assert_allclose(t.sum(axis=1), 1.0, atol=1e-12)

    def test_discrete_emissions_fit(self):
        rng = np.random.default_rng(6)
        obs = ObservationSequence(rng.integers(0, 3, 200))
        cfg = EmConfig(num_states=2, num_restarts=2, seed=3)
        result = em_fit(obs, cfg)
        table = result.model.emission.table
        np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-12)
        diffs = np.diff(result.log_likelihoods)
        assert np.all(diffs >= -1e-9)

    def test_quantile_init(self):
        rng = np.random.default_rng(8)
        obs = ObservationSequence(rng.normal(0, 1, 100))
        cfg = EmConfig(num_states=2, init="quantiles", num_restarts=2, seed=5)
        assert np.isfinite(em_fit(obs, cfg).log_likelihoods[-1])

    def test_needs_more_observations_than_states(self):
        with pytest.raises(ModelError):
            em_fit(
                ObservationSequence(np.array([0.1, 0.2])),
                EmConfig(num_states=2),
            )

    def test_reordered_model_keeps_likelihood(self):
        rng = np.random.default_rng(9)
        obs = ObservationSequence(rng.normal(0, 1, 80))
        cfg = EmConfig(num_states=3, num_restarts=2, seed=2)
        model = em_fit(obs, cfg).model
        reordered = reorder_states(model, canonical_state_order(model))
        assert np.all(np.diff(reordered.emission.means) >= 0)
        assert forward_backward(reordered, obs).log_evidence == pytest.approx(
            forward_backward(model, obs).log_evidence, abs=1e-9
        )
