import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrtcat import (
    DataValidationError,
    DesignInputs,
    NullContrastError,
    NumericalError,
    SingularSystemError,
    build_pt,
    build_v,
    eo_pattern,
    inputs_from_config,
    mee_pattern,
    noncentrality,
    power_at_n,
    required_sample_size,
    summarize_effects,
    tau_pattern,
)


def golden_inputs(**overrides):
    """Two active arms, 210 points, constant availability and effect."""
    base = dict(
        k_arms=2,
        t_points=210,
        rand_probs=np.array([0.3, 0.3]),
        tau=np.ones(210),
        f=np.ones((210, 1)),
        gamma=np.array([0.053, 0.0]),
        q=1,
        l_matrix=np.array([[1.0, -1.0]]),
        eta=0.05,
        power_target=0.8,
    )
    base.update(overrides)
    return DesignInputs(**base)


class TestBuildPt:
    def test_two_arm_value(self):
        np.testing.assert_allclose(
            build_pt(np.array([0.3, 0.3])),
            [[0.21, -0.09], [-0.09, 0.21]],
            atol=1e-12,
        )

    def test_single_arm_value(self):
        np.testing.assert_allclose(build_pt(np.array([0.4])), [[0.24]], atol=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DataValidationError):
            build_pt(np.array([0.5, 0.5]))
        with pytest.raises(DataValidationError):
            build_pt(np.array([0.0, 0.3]))

    @settings(max_examples=60)
    @given(
        st.lists(st.floats(0.02, 0.4), min_size=1, max_size=3).filter(
            lambda ps: sum(ps) < 0.95
        )
    )
    def test_positive_definite(self, probs):
        eigs = np.linalg.eigvalsh(build_pt(np.array(probs)))
        assert eigs.min() > 0.0


class TestBuildV:
    def test_golden_value(self):
        np.testing.assert_allclose(
            build_v(golden_inputs()),
            [[44.1, -18.9], [-18.9, 44.1]],
            atol=1e-9,
        )

    def test_single_point_reduces_to_weighted_kron(self):
        inputs = DesignInputs(
            k_arms=2,
            t_points=1,
            rand_probs=np.array([0.25, 0.25]),
            tau=np.array([0.6]),
            f=np.array([[1.0]]),
            gamma=np.array([0.1, 0.0]),
            q=1,
            l_matrix=np.array([[1.0, -1.0]]),
        )
        np.testing.assert_allclose(
            build_v(inputs), 0.6 * build_pt(np.array([0.25, 0.25])), atol=1e-12
        )

    def test_rank_deficient_f_basis_rejected(self):
        t_points = 10
        f = np.column_stack([np.ones(t_points), 2.0 * np.ones(t_points)])
        inputs = DesignInputs(
            k_arms=2,
            t_points=t_points,
            rand_probs=np.array([0.3, 0.3]),
            tau=np.ones(t_points),
            f=f,
            gamma=np.zeros(4) + 0.1,
            q=1,
            l_matrix=np.eye(2),
        )
        with pytest.raises(SingularSystemError, match="singular"):
            build_v(inputs)


class TestNoncentrality:
    def test_golden_rate(self):
        lam = noncentrality(93, golden_inputs())
        assert lam / 93 == pytest.approx(0.0884835, abs=1e-10)
        assert lam == pytest.approx(8.2289655, abs=1e-6)

    def test_linear_in_n_quadratic_in_gamma(self):
        inputs = golden_inputs()
        lam50 = noncentrality(50, inputs)
        assert noncentrality(100, inputs) == pytest.approx(2 * lam50, rel=1e-12)
        doubled = golden_inputs(gamma=np.array([0.106, 0.0]))
        assert noncentrality(50, doubled) == pytest.approx(4 * lam50, rel=1e-10)

    def test_identity_contrast_reduces_to_quadratic_form(self):
        gamma = np.array([0.07, -0.04])
        inputs = golden_inputs(gamma=gamma, l_matrix=np.eye(2))
        v = build_v(inputs)
        assert noncentrality(60, inputs) == pytest.approx(
            60 * float(gamma @ v @ gamma), rel=1e-10
        )

    def test_null_alternative_rejected(self):
        inputs = golden_inputs(gamma=np.array([0.05, 0.05]))
        with pytest.raises(NullContrastError):
            noncentrality(50, inputs)

    def test_invariant_to_contrast_row_scaling(self):
        a = noncentrality(40, golden_inputs())
        b = noncentrality(40, golden_inputs(l_matrix=np.array([[3.0, -3.0]])))
        assert a == pytest.approx(b, rel=1e-10)

    def test_invariant_to_invertible_row_mixing(self):
        rng = np.random.default_rng(6)
        gamma = np.array([0.08, -0.03])
        l = np.eye(2)
        r = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
        a = noncentrality(40, golden_inputs(gamma=gamma, l_matrix=l))
        b = noncentrality(40, golden_inputs(gamma=gamma, l_matrix=r @ l))
        assert a == pytest.approx(b, rel=1e-8)


class TestSampleSize:
    def test_golden_answer(self):
        result = required_sample_size(golden_inputs())
        assert result.n == 93
        assert result.achieved_power >= 0.8
        assert result.lambda_per_n == pytest.approx(0.0884835, abs=1e-10)
        np.testing.assert_allclose(
            result.v_matrix, [[44.1, -18.9], [-18.9, 44.1]], atol=1e-9
        )

    def test_power_boundary(self):
        inputs = golden_inputs()
        assert power_at_n(inputs, 93) >= 0.8
        assert power_at_n(inputs, 92) < 0.8

    def test_power_values_at_boundary(self):
        inputs = golden_inputs()
        assert power_at_n(inputs, 93) == pytest.approx(0.80166, abs=5e-5)
        assert power_at_n(inputs, 92) == pytest.approx(0.79723, abs=5e-5)

    def test_power_nondecreasing_in_n(self):
        inputs = golden_inputs()
        values = [power_at_n(inputs, n) for n in range(20, 201, 20)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_larger_effect_needs_fewer_subjects(self):
        ns = []
        for scale in (1.0, 1.5, 2.0, 3.0):
            inputs = golden_inputs(gamma=np.array([0.053 * scale, 0.0]))
            ns.append(required_sample_size(inputs).n)
        assert all(b < a for a, b in zip(ns, ns[1:]))

    def test_higher_availability_needs_fewer_subjects(self):
        ns = []
        for aa in (0.4, 0.6, 0.8, 1.0):
            inputs = golden_inputs(tau=np.full(210, aa))
            ns.append(required_sample_size(inputs).n)
        assert all(b <= a for a, b in zip(ns, ns[1:]))

    def test_zero_power_target_returns_search_start(self):
        result = required_sample_size(golden_inputs(power_target=0.0))
        assert result.n == 10
        assert 0.0 < result.achieved_power < 1.0

    def test_unreachable_power_hits_cap(self):
        inputs = golden_inputs(gamma=np.array([1e-4, 0.0]))
        with pytest.raises(NumericalError, match="cap"):
            required_sample_size(inputs, cap=500)

    def test_minimality_walk_down(self):
        # returned n is the smallest integer meeting the target
        inputs = golden_inputs(power_target=0.6)
        result = required_sample_size(inputs)
        assert power_at_n(inputs, result.n) >= 0.6
        assert power_at_n(inputs, result.n - 1) < 0.6

    def test_power_at_n_requires_headroom(self):
        with pytest.raises(DataValidationError, match="q \\+ l"):
            power_at_n(golden_inputs(), 3)


class TestDesignInputsValidation:
    def test_probability_rows_checked(self):
        with pytest.raises(DataValidationError, match="positive"):
            golden_inputs(rand_probs=np.array([0.6, 0.4]))

    def test_tau_range_checked(self):
        with pytest.raises(DataValidationError, match="tau"):
            golden_inputs(tau=np.zeros(210))

    def test_gamma_length_checked(self):
        with pytest.raises(DataValidationError, match="gamma"):
            golden_inputs(gamma=np.array([0.1]))

    def test_contrast_width_checked(self):
        with pytest.raises(DataValidationError, match="columns"):
            golden_inputs(l_matrix=np.array([[1.0, -1.0, 0.0]]))

    def test_broadcast_probs(self):
        inputs = golden_inputs()
        assert inputs.rand_probs.shape == (210, 2)
        assert inputs.p == 1
        assert inputs.rank_l == 1


class TestTauPattern:
    def test_constant(self):
        np.testing.assert_allclose(tau_pattern("constant", 0.8, 0.0, 5), np.full(5, 0.8))

    def test_linear_endpoints_and_average(self):
        tau = tau_pattern("linear", 0.5, 0.2, 11)
        assert tau[0] == pytest.approx(0.7, abs=1e-12)
        assert tau[-1] == pytest.approx(0.3, abs=1e-12)
        assert tau.mean() == pytest.approx(0.5, abs=1e-12)

    def test_linear_zero_slope_is_constant(self):
        np.testing.assert_allclose(
            tau_pattern("linear", 0.6, 0.0, 7), np.full(7, 0.6), atol=1e-15
        )

    def test_out_of_range_rejected(self):
        with pytest.raises(DataValidationError, match="leaves"):
            tau_pattern("linear", 0.9, 0.2, 10)

    def test_unknown_kind(self):
        with pytest.raises(DataValidationError, match="kind"):
            tau_pattern("cubic", 0.5, 0.0, 10)

    @settings(max_examples=60)
    @given(
        st.floats(0.25, 0.75, allow_nan=False),
        st.floats(-0.2, 0.2, allow_nan=False),
        st.integers(2, 40),
    )
    def test_linear_average_is_aa(self, aa, theta, t_points):
        tau = tau_pattern("linear", aa, theta, t_points)
        assert tau.mean() == pytest.approx(aa, abs=1e-10)


class TestEoPattern:
    def test_constant(self):
        coeffs, curve = eo_pattern("constant", 0.0, 0.4, np.ones(6))
        np.testing.assert_allclose(coeffs, [0.4])
        np.testing.assert_allclose(curve, np.full(6, 0.4))

    def test_linear_flat_when_theta_zero(self):
        coeffs, curve = eo_pattern("linear", 0.0, 0.4, np.full(8, 0.7))
        assert coeffs[1] == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(curve, np.full(8, 0.4), atol=1e-12)

    @pytest.mark.parametrize("tau", [np.ones(15), tau_pattern("linear", 0.6, 0.2, 15)])
    def test_linear_constraints(self, tau):
        theta, aeo = 0.3, 0.4
        _, curve = eo_pattern("linear", theta, aeo, tau)
        # endpoint ratio in cross-multiplied form
        assert (1.0 - theta) * curve[0] == pytest.approx(
            (1.0 + theta) * curve[-1], abs=1e-10
        )
        # availability-weighted average
        assert float((tau * curve).sum() / tau.sum()) == pytest.approx(aeo, abs=1e-10)

    @pytest.mark.parametrize("tau", [np.ones(15), tau_pattern("linear", 0.6, 0.2, 15)])
    def test_quadratic_constraints(self, tau):
        theta, aeo = 0.25, 0.5
        coeffs, curve = eo_pattern("quadratic", theta, aeo, tau)
        t_points = tau.shape[0]
        assert curve[0] == pytest.approx(curve[-1], abs=1e-10)
        mid = (t_points + 1) // 2
        assert (1.0 - theta) * curve[mid - 1] == pytest.approx(
            (1.0 + theta) * curve[0], abs=1e-10
        )
        assert float((tau * curve).sum() / tau.sum()) == pytest.approx(aeo, abs=1e-10)
        assert coeffs.shape == (3,)

    def test_quadratic_flat_when_theta_zero(self):
        _, curve = eo_pattern("quadratic", 0.0, 0.3, np.ones(9))
        np.testing.assert_allclose(curve, np.full(9, 0.3), atol=1e-10)

    def test_theta_domain(self):
        with pytest.raises(DataValidationError, match="theta_g"):
            eo_pattern("linear", 1.0, 0.4, np.ones(5))

    def test_unknown_kind(self):
        with pytest.raises(DataValidationError, match="kind"):
            eo_pattern("cubic", 0.1, 0.4, np.ones(5))


class TestMeePattern:
    def test_constant(self):
        gamma, curves = mee_pattern("constant", 0.0, 0.0, (0.1, 0.3), np.ones(5))
        np.testing.assert_allclose(gamma, [0.1, 0.3])
        np.testing.assert_allclose(curves[:, 0], np.full(5, 0.1))
        np.testing.assert_allclose(curves[:, 1], np.full(5, 0.3))

    def test_linear_flat_when_thetas_zero(self):
        gamma, curves = mee_pattern("linear", 0.0, 0.0, (0.1, 0.3), np.full(6, 0.8))
        np.testing.assert_allclose(gamma, [0.1, 0.0, 0.3, 0.0], atol=1e-12)
        np.testing.assert_allclose(curves[:, 0], np.full(6, 0.1), atol=1e-12)
        np.testing.assert_allclose(curves[:, 1], np.full(6, 0.3), atol=1e-12)

    @pytest.mark.parametrize("tau", [np.ones(20), tau_pattern("linear", 0.7, 0.15, 20)])
    def test_linear_constraints(self, tau):
        theta1, theta2 = 0.3, 0.2
        sate = (0.15, 0.25)
        gamma, curves = mee_pattern("linear", theta1, theta2, sate, tau)
        t = np.arange(1, tau.shape[0] + 1, dtype=float)
        # gamma reproduces the curves in the per-arm (1, t) basis
        np.testing.assert_allclose(curves[:, 0], gamma[0] + gamma[1] * t, atol=1e-12)
        np.testing.assert_allclose(curves[:, 1], gamma[2] + gamma[3] * t, atol=1e-12)
        # arm 1 endpoint ratio
        assert (1.0 - theta1) * curves[0, 0] == pytest.approx(
            (1.0 + theta1) * curves[-1, 0], abs=1e-10
        )
        # arm gap endpoint ratio
        gap = curves[:, 1] - curves[:, 0]
        assert (1.0 - theta2) * gap[0] == pytest.approx(
            (1.0 + theta2) * gap[-1], abs=1e-10
        )
        # availability-weighted averages
        wavg = (tau[:, None] * curves).sum(axis=0) / tau.sum()
        np.testing.assert_allclose(wavg, sate, atol=1e-10)

    def test_theta_domain(self):
        with pytest.raises(DataValidationError, match="theta_f2"):
            mee_pattern("linear", 0.0, -1.0, (0.1, 0.2), np.ones(5))

    def test_unknown_kind(self):
        with pytest.raises(DataValidationError, match="kind"):
            mee_pattern("spline", 0.0, 0.0, (0.1, 0.2), np.ones(5))


class TestSummarizeEffects:
    def test_flat_curves(self):
        t_points = 6
        smee = np.column_stack([np.full(t_points, 0.1), np.full(t_points, 0.3)])
        eo = np.full(t_points, 0.4)
        tau = np.full(t_points, 0.7)
        summary = summarize_effects(smee, eo, tau, np.array([[1.0, -1.0]]))
        np.testing.assert_allclose(summary.sate, [0.1, 0.3], atol=1e-12)
        np.testing.assert_allclose(summary.delta_sate, [-0.2], atol=1e-12)
        assert summary.aeo == pytest.approx(0.4)
        assert summary.aa == pytest.approx(0.7)

    def test_weighted_average_small_example(self):
        tau = np.array([1.0, 0.5, 0.5])
        smee = np.array([[0.2, 0.0], [0.0, 0.4], [0.4, 0.0]])
        eo = np.array([1.0, 2.0, 3.0])
        summary = summarize_effects(smee, eo, tau, np.eye(2))
        assert summary.sate[0] == pytest.approx((0.2 + 0.2) / 2.0)
        assert summary.sate[1] == pytest.approx(0.2 / 2.0)
        assert summary.aeo == pytest.approx((1.0 + 1.0 + 1.5) / 2.0)
        assert summary.aa == pytest.approx(2.0 / 3.0)

    def test_shape_errors(self):
        with pytest.raises(DataValidationError):
            summarize_effects(np.zeros((4, 2)), np.zeros(5), np.ones(5), np.eye(2))
        with pytest.raises(DataValidationError):
            summarize_effects(np.zeros((5, 2)), np.zeros(5), np.ones(5), np.eye(3))


GOLDEN_CFG = {
    "K": "2",
    "T": "210",
    "p": "0.4, 0.3, 0.3",
    "tau_kind": "constant",
    "AA": "1.0",
    "f_kind": "constant",
    "sate1": "0.053",
    "sate2": "0.0",
    "q": "1",
    "L": "pairwise(1,2)",
    "eta": "0.05",
    "power": "0.8",
}


class TestInputsFromConfig:
    def test_golden_config_reproduces_answer(self):
        inputs = inputs_from_config(GOLDEN_CFG)
        assert required_sample_size(inputs).n == 93

    def test_missing_required_key(self):
        cfg = dict(GOLDEN_CFG)
        del cfg["sate1"]
        with pytest.raises(DataValidationError, match="sate1"):
            inputs_from_config(cfg)

    def test_probability_count_checked(self):
        cfg = dict(GOLDEN_CFG, p="0.5, 0.5")
        with pytest.raises(DataValidationError, match="K\\+1"):
            inputs_from_config(cfg)

    def test_probability_sum_checked(self):
        cfg = dict(GOLDEN_CFG, p="0.4, 0.3, 0.2")
        with pytest.raises(DataValidationError, match="sum"):
            inputs_from_config(cfg)

    def test_only_two_arms_supported(self):
        cfg = dict(GOLDEN_CFG, K="3")
        with pytest.raises(DataValidationError, match="K=2"):
            inputs_from_config(cfg)

    def test_availability_pattern_barely_moves_n(self):
        # holding the average availability fixed, the shape of the
        # availability curve changes the answer by at most one subject
        flat = dict(GOLDEN_CFG, AA="0.8")
        sloped = dict(GOLDEN_CFG, AA="0.8", tau_kind="linear", theta_tau="0.15")
        n_flat = required_sample_size(inputs_from_config(flat)).n
        n_sloped = required_sample_size(inputs_from_config(sloped)).n
        assert abs(n_flat - n_sloped) <= 1

    def test_linear_effect_basis(self):
        cfg = dict(
            GOLDEN_CFG,
            T="30",
            f_kind="linear",
            theta_f1="0.2",
            theta_f2="0.1",
            sate1="0.15",
            sate2="0.05",
        )
        inputs = inputs_from_config(cfg)
        assert inputs.p == 2
        assert inputs.f.shape == (30, 2)
        result = required_sample_size(inputs)
        assert result.n > inputs.q + inputs.rank_l + 1
