import numpy as np
import pytest

from mrtcat import (
    DataValidationError,
    GenerativeConfig,
    ModelSpec,
    NumeratorPolicy,
    NumericalError,
    derive_replicate_seed,
    gm_ev_scales,
    required_sample_size,
    run_monte_carlo,
    scenario_from_config,
    simulate_trial,
    validate,
)
from mrtcat.simulate import _resolve_threads


def null_config(family="gm0", t_points=8, tau=0.8, **kwargs):
    return GenerativeConfig(
        family=family,
        t_points=t_points,
        rand_probs=np.array([0.5, 0.3]),
        tau_curve=np.full(t_points, tau),
        **kwargs,
    )


class TestGmEvScales:
    def test_symmetric_probs(self):
        r, s = gm_ev_scales(0.0, 0.2, np.array([0.3, 0.3]), 1, 5)
        assert r == 1.0
        np.testing.assert_allclose(s, np.sqrt([1.0, 1.2, 0.8]), atol=1e-12)

    def test_no_shape_parameters(self):
        r, s = gm_ev_scales(0.0, 0.0, np.array([0.5, 0.3]), 3, 7)
        assert r == 1.0
        np.testing.assert_allclose(s, np.ones(3), atol=1e-12)

    def test_time_factor_endpoints(self):
        values = [gm_ev_scales(0.5, 0.0, np.array([0.3, 0.3]), t, 3)[0] for t in (1, 2, 3)]
        np.testing.assert_allclose(values, np.sqrt([1.5, 1.0, 0.5]), atol=1e-12)

    def test_weighted_second_moment_is_one(self):
        for theta_s in (-0.4, 0.0, 0.3, 0.6):
            for p1, p2 in ((0.3, 0.3), (0.5, 0.3), (0.2, 0.4)):
                _, s = gm_ev_scales(0.0, theta_s, np.array([p1, p2]), 1, 4)
                p0 = 1.0 - p1 - p2
                total = p0 * s[0] ** 2 + p1 * s[1] ** 2 + p2 * s[2] ** 2
                assert total == pytest.approx(1.0, abs=1e-12)

    def test_time_factors_average_to_one(self):
        t_points = 9
        rs = [
            gm_ev_scales(0.3, 0.0, np.array([0.3, 0.3]), t, t_points)[0]
            for t in range(1, t_points + 1)
        ]
        assert np.mean(np.square(rs)) == pytest.approx(1.0, abs=1e-12)

    def test_negative_radicand_rejected(self):
        with pytest.raises(DataValidationError, match="radicand"):
            gm_ev_scales(0.0, 1.2, np.array([0.3, 0.3]), 1, 5)
        with pytest.raises(DataValidationError, match="radicand"):
            gm_ev_scales(1.5, 0.0, np.array([0.3, 0.3]), 5, 5)


class TestReplicateSeeds:
    def test_deterministic(self):
        assert derive_replicate_seed(2024, 7) == derive_replicate_seed(2024, 7)

    def test_distinct_across_indices(self):
        seeds = {derive_replicate_seed(99, i) for i in range(10_000)}
        assert len(seeds) == 10_000

    def test_distinct_across_masters(self):
        assert derive_replicate_seed(1, 0) != derive_replicate_seed(2, 0)

    def test_in_64_bit_range(self):
        for i in (0, 1, 2**40, 123456789):
            assert 0 <= derive_replicate_seed(0, i) < 2**64

    def test_adjacent_streams_uncorrelated(self):
        draws = 100_000
        a = np.random.default_rng(derive_replicate_seed(5, 0)).standard_normal(draws)
        b = np.random.default_rng(derive_replicate_seed(5, 1)).standard_normal(draws)
        rho = float(np.corrcoef(a, b)[0, 1])
        assert abs(rho) < 0.01


class TestSimulateTrial:
    def test_shapes_and_validity(self):
        config = null_config(eo_basis="linear", eo_coeffs=(0.4, -0.01))
        data = simulate_trial(config, n=25, seed=3)
        assert (data.n, data.t_points, data.k_arms) == (25, 8, 2)
        assert validate(data).ok
        assert set(data.feature_names) == {"t", "t2"}
        assert data.clipped_availability == 0

    def test_unavailable_points_carry_reference_arm(self):
        data = simulate_trial(null_config(tau=0.5), n=200, seed=11)
        assert (data.trt[data.avail == 0] == 0).all()

    def test_z_feature_present_when_needed(self):
        config = null_config(mee_basis="z", mee_coeffs=((0.1, 0.2), (0.0, 0.3)))
        data = simulate_trial(config, n=30, seed=5)
        assert "Z" in data.feature_names
        z = data.features["Z"]
        assert set(np.unique(z)).issubset({0.0, 1.0, 2.0})

    def test_same_seed_bitwise_identical(self):
        config = null_config(family="gm_sc", nu1=0.4)
        a = simulate_trial(config, n=40, seed=123)
        b = simulate_trial(config, n=40, seed=123)
        np.testing.assert_array_equal(a.outcome, b.outcome)
        np.testing.assert_array_equal(a.trt, b.trt)
        np.testing.assert_array_equal(a.avail, b.avail)
        c = simulate_trial(config, n=40, seed=124)
        assert not np.array_equal(a.outcome, c.outcome)

    def test_availability_rate_matches_tau(self):
        data = simulate_trial(null_config(tau=0.65), n=20_000, seed=8)
        assert data.avail.mean() == pytest.approx(0.65, abs=0.01)

    def test_arm_frequencies_match_probabilities(self):
        data = simulate_trial(null_config(tau=1.0), n=20_000, seed=9)
        freq = np.bincount(data.trt.ravel(), minlength=3) / data.trt.size
        np.testing.assert_allclose(freq, [0.2, 0.5, 0.3], atol=0.01)

    def test_arm_conditional_means(self):
        config = null_config(
            t_points=3,
            tau=1.0,
            eo_coeffs=(0.2,),
            mee_coeffs=((0.3,), (0.55,)),
        )
        data = simulate_trial(config, n=5000, seed=13)
        for arm, target in ((0, 0.2), (1, 0.5), (2, 0.75)):
            got = float(data.outcome[data.trt == arm].mean())
            assert got == pytest.approx(target, abs=0.05)

    def test_gm_sc_unit_variance_and_lag_correlation(self):
        config = null_config(family="gm_sc", t_points=2, tau=1.0, nu1=0.6)
        data = simulate_trial(config, n=500_000, seed=17)
        assert data.outcome.var() == pytest.approx(1.0, abs=0.01)
        rho = float(np.corrcoef(data.outcome[:, 0], data.outcome[:, 1])[0, 1])
        assert rho == pytest.approx(0.6 * 0.8, abs=0.01)

    def test_gm_ev_average_variance_is_one(self):
        config = null_config(family="gm_ev", t_points=10, tau=1.0, theta_r=0.5, theta_s=0.3)
        data = simulate_trial(config, n=100_000, seed=19)
        assert data.outcome.var() == pytest.approx(1.0, abs=0.01)

    def test_gm_ea_reduces_to_plain_availability(self):
        config = null_config(family="gm_ea", tau=0.7, nu2=0.0, nu3=0.0)
        data = simulate_trial(config, n=20_000, seed=23)
        assert data.avail.mean() == pytest.approx(0.7, abs=0.01)
        assert data.clipped_availability == 0

    def test_gm_ea_dependence_and_clipping(self):
        config = null_config(family="gm_ea", tau=0.95, nu2=0.2, nu3=0.2)
        data = simulate_trial(config, n=5000, seed=29)
        assert data.clipped_availability > 0
        assert validate(data).ok

    def test_bad_arguments(self):
        with pytest.raises(DataValidationError):
            simulate_trial(null_config(), n=0, seed=1)
        with pytest.raises(DataValidationError):
            simulate_trial(null_config(), n=5, seed=-1)


class TestGenerativeConfigValidation:
    def test_unknown_family(self):
        with pytest.raises(DataValidationError, match="family"):
            null_config(family="gm9")

    def test_effect_coefficient_shape(self):
        with pytest.raises(DataValidationError, match="mee_coeffs"):
            null_config(mee_basis="linear", mee_coeffs=((0.1,), (0.2,)))

    def test_eo_coefficient_shape_for_zcat(self):
        with pytest.raises(DataValidationError, match="eo_coeffs"):
            null_config(eo_basis="zcat", eo_coeffs=(0.1, 0.2), z_levels=3)

    def test_availability_weights_bounded(self):
        with pytest.raises(DataValidationError, match="nu2"):
            null_config(family="gm_ea", nu2=0.5)

    def test_serial_weight_bounded(self):
        with pytest.raises(DataValidationError, match="nu1"):
            null_config(family="gm_sc", nu1=1.0)

    def test_gm_ev_scale_probe_at_construction(self):
        with pytest.raises(DataValidationError, match="radicand"):
            null_config(family="gm_ev", theta_s=1.5)

    def test_probability_rows(self):
        with pytest.raises(DataValidationError):
            GenerativeConfig(
                family="gm0",
                t_points=4,
                rand_probs=np.array([0.7, 0.4]),
                tau_curve=np.full(4, 0.8),
            )


MARGINAL_SPEC = ModelSpec(numerator=NumeratorPolicy("match_randomization"))


class TestRunMonteCarlo:
    def test_summary_fields_and_bounds(self):
        config = null_config(eo_coeffs=(0.2,), mee_coeffs=((0.3,), (0.5,)))
        summary = run_monte_carlo(
            config,
            n=25,
            replicates=40,
            spec=MARGINAL_SPEC,
            contrast=np.array([[1.0, -1.0]]),
            seed=101,
            true_beta=np.array([0.3, 0.5]),
        )
        assert summary.replicates == summary.completed == 40
        assert summary.failures == 0
        assert summary.param_names == ("arm1:intercept", "arm2:intercept")
        assert 0.0 <= summary.rejection_rate <= 1.0
        for b, r in zip(summary.bias, summary.rmse):
            assert r >= abs(b) - 1e-12
        for c in summary.coverage:
            assert 0.0 <= c <= 1.0

    def test_thread_count_does_not_change_results(self):
        config = null_config(family="gm_ea", tau=0.9, nu2=0.1, nu3=0.1)
        kwargs = dict(
            n=20,
            replicates=30,
            spec=MARGINAL_SPEC,
            contrast=np.array([[1.0, -1.0]]),
            seed=7,
            true_beta=np.array([0.0, 0.0]),
            collect_replicates=True,
        )
        serial = run_monte_carlo(config, threads=1, **kwargs)
        parallel = run_monte_carlo(config, threads=4, **kwargs)
        assert serial.to_dict() == parallel.to_dict()
        assert serial.records == parallel.records

    def test_no_truth_yields_nan_summaries(self):
        summary = run_monte_carlo(
            null_config(),
            n=15,
            replicates=5,
            spec=MARGINAL_SPEC,
            contrast=np.array([[1.0, -1.0]]),
            seed=3,
        )
        assert all(np.isnan(b) for b in summary.bias)
        assert all(np.isnan(c) for c in summary.coverage)
        as_dict = summary.to_dict()
        assert as_dict["bias"] == [None, None]
        assert "records" not in as_dict

    def test_per_replicate_records(self):
        summary = run_monte_carlo(
            null_config(),
            n=12,
            replicates=6,
            spec=MARGINAL_SPEC,
            contrast=np.array([[1.0, -1.0]]),
            seed=5,
            collect_replicates=True,
        )
        assert len(summary.records) == 6
        first = summary.records[0]
        assert first["ok"] is True
        assert len(first["beta"]) == 2
        assert first["seed"] == derive_replicate_seed(5, 0)

    def test_failure_budget_aborts(self):
        # n = 3 subjects cannot support q + K*p = 3 coefficients
        with pytest.raises(NumericalError, match="failed"):
            run_monte_carlo(
                null_config(),
                n=3,
                replicates=10,
                spec=MARGINAL_SPEC,
                contrast=np.array([[1.0, -1.0]]),
                seed=1,
            )

    def test_replicate_count_validated(self):
        with pytest.raises(DataValidationError):
            run_monte_carlo(
                null_config(),
                n=10,
                replicates=0,
                spec=MARGINAL_SPEC,
                contrast=np.array([[1.0, -1.0]]),
            )


class TestResolveThreads:
    def test_explicit_wins(self):
        assert _resolve_threads(3) == 3

    def test_environment_default(self, monkeypatch):
        monkeypatch.setenv("MRTCAT_THREADS", "5")
        assert _resolve_threads(None) == 5

    def test_unset_defaults_to_one(self, monkeypatch):
        monkeypatch.delenv("MRTCAT_THREADS", raising=False)
        assert _resolve_threads(None) == 1

    def test_bad_values(self, monkeypatch):
        monkeypatch.setenv("MRTCAT_THREADS", "many")
        with pytest.raises(DataValidationError):
            _resolve_threads(None)
        with pytest.raises(DataValidationError):
            _resolve_threads(0)


BASE_SCENARIO = {
    "family": "gm0",
    "n": "30",
    "T": "15",
    "p": "0.2, 0.5, 0.3",
    "tau_kind": "constant",
    "AA": "1.0",
    "eo_coeffs": "0.2, 0.5, 0.4",
    "eo_kind": "zcat",
    "mee_coeffs": "0.1, 0.3; 0.45, 0.1",
    "f_kind": "z",
    "fit_f": "constant",
    "fit_g": "z",
    "replicates": "50",
    "seed": "42",
}


class TestScenarioFromConfig:
    def test_full_scenario_resolves(self):
        scenario = scenario_from_config(dict(BASE_SCENARIO))
        assert scenario.n == 30
        assert scenario.config.family == "gm0"
        assert scenario.config.eo_basis == "zcat"
        assert scenario.config.mee_basis == "z"
        np.testing.assert_allclose(
            scenario.config.mee_coeffs, [[0.1, 0.3], [0.45, 0.1]]
        )
        assert scenario.model_spec.f_columns == ()
        assert scenario.model_spec.g_columns == ("Z",)
        assert scenario.replicates == 50
        assert scenario.seed == 42

    def test_marginal_truth_averages_over_z(self):
        scenario = scenario_from_config(dict(BASE_SCENARIO))
        np.testing.assert_allclose(scenario.true_beta, [0.4, 0.55], atol=1e-12)

    def test_matching_basis_passes_coefficients_through(self):
        cfg = dict(BASE_SCENARIO, fit_f="z")
        scenario = scenario_from_config(cfg)
        np.testing.assert_allclose(scenario.true_beta, [0.1, 0.3, 0.45, 0.1])

    def test_explicit_truth_override(self):
        cfg = dict(BASE_SCENARIO, true_beta="0.0, 0.0")
        scenario = scenario_from_config(cfg)
        np.testing.assert_allclose(scenario.true_beta, [0.0, 0.0])

    def test_mismatched_basis_has_no_closed_form_truth(self):
        cfg = dict(BASE_SCENARIO)
        cfg.update(
            {
                "f_kind": "linear",
                "mee_coeffs": "0.1, 0.01; 0.2, -0.01",
                "eo_kind": "constant",
                "eo_coeffs": "0.3",
                "fit_g": "constant",
            }
        )
        assert scenario_from_config(cfg).true_beta is None

    def test_pattern_knob_path(self):
        cfg = {
            "family": "gm_ev",
            "n": "40",
            "T": "12",
            "p": "0.4, 0.3, 0.3",
            "AA": "0.75",
            "eo_kind": "linear",
            "theta_g": "0.3",
            "AEO": "0.4",
            "f_kind": "constant",
            "sate1": "0.1",
            "sate2": "0.2",
            "theta_r": "0.4",
            "theta_s": "0.2",
        }
        scenario = scenario_from_config(cfg)
        assert scenario.config.eo_basis == "linear"
        np.testing.assert_allclose(scenario.true_beta, [0.1, 0.2], atol=1e-12)

    def test_auto_sample_size_matches_direct_search(self):
        cfg = {
            "family": "gm0",
            "n": "auto",
            "T": "30",
            "p": "0.4, 0.3, 0.3",
            "AA": "0.8",
            "f_kind": "constant",
            "sate1": "0.25",
            "sate2": "0.0",
            "power": "0.8",
        }
        scenario = scenario_from_config(cfg)
        from mrtcat import DesignInputs

        inputs = DesignInputs(
            k_arms=2,
            t_points=30,
            rand_probs=np.array([0.3, 0.3]),
            tau=np.full(30, 0.8),
            f=np.ones((30, 1)),
            gamma=np.array([0.25, 0.0]),
            q=1,
            l_matrix=np.array([[1.0, -1.0]]),
        )
        assert scenario.n == required_sample_size(inputs).n

    def test_missing_required_key(self):
        cfg = dict(BASE_SCENARIO)
        del cfg["T"]
        with pytest.raises(DataValidationError, match="T"):
            scenario_from_config(cfg)

    def test_bad_fit_basis(self):
        with pytest.raises(DataValidationError, match="fit_f"):
            scenario_from_config(dict(BASE_SCENARIO, fit_f="cubic"))

    def test_zcat_requires_explicit_coefficients(self):
        cfg = dict(BASE_SCENARIO)
        del cfg["eo_coeffs"]
        with pytest.raises(DataValidationError, match="eo_coeffs"):
            scenario_from_config(cfg)
