"""Mechanism tests: noise plans, budgets, exact MSE accounting, determinism."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privconv.harness import constant_filter, impulse_filter, random_sign_filter, running_sum_filter
from privconv.mechanisms import (
    MECHANISM_NAMES,
    MechanismResult,
    NoisePlan,
    PrivacyParams,
    _kappa,
    _mirrored_complex_noise,
    _freq_noise_scales,
    _spectral_state,
    baseline_input_perturb,
    baseline_output_perturb_freq,
    baseline_output_perturb_time,
    fourier_mechanism,
    kkt_optimality_check,
    mechanism_theoretical_mse,
    optimal_noise_plan,
    sample_outputs,
    spectral_partition,
)
from privconv.noise import Seed
from privconv.transforms import BooleanCube, Cyclic, RealSequence, convolve_direct, dft

PRIV = PrivacyParams(1.0, math.exp(-1.0))


def zeros(n):
    return RealSequence.cyclic(np.zeros(n))


class TestPrivacyParams:
    def test_ln_inv_delta_round_trip(self):
        p = PrivacyParams.from_ln_inv_delta(2.0, 3.0)
        assert abs(p.ln_inv_delta - 3.0) < 1e-12
        assert abs(p.delta - math.exp(-3.0)) < 1e-15

    def test_composition_budget(self):
        p = PrivacyParams.from_ln_inv_delta(2.0, 2.0)
        assert abs(p.composition_budget - 1.0) < 1e-12

    def test_validation(self):
        for eps, delta in ((0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, 1.0), (math.nan, 0.5)):
            with pytest.raises(ValueError):
                PrivacyParams(eps, delta)
        with pytest.raises(ValueError):
            PrivacyParams.from_ln_inv_delta(1.0, 0.0)
        with pytest.raises(ValueError):
            PrivacyParams.from_ln_inv_delta(1.0, 1e9)


class TestOptimalNoisePlan:
    def test_impulse_scales_are_sqrt_two(self):
        # flat spectrum 1/sqrt(N): b_i = sqrt(2 ln(1/delta)) exactly
        plan = optimal_noise_plan(dft(impulse_filter(64)), PRIV)
        assert np.allclose(plan.scales, math.sqrt(2.0), rtol=1e-12)
        assert plan.support.size == 64

    def test_constant_filter_single_coefficient(self):
        n = 64
        plan = optimal_noise_plan(dft(constant_filter(n)), PRIV)
        assert plan.support.tolist() == [0]
        assert abs(plan.scales[0] - math.sqrt(2.0 / n)) < 1e-12
        assert np.all(plan.scales[1:] == 0.0)

    def test_budget_is_spent_exactly(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            h = RealSequence.cyclic(rng.normal(size=48))
            plan = optimal_noise_plan(dft(h), PRIV)
            target = PRIV.composition_budget
            assert abs(plan.budget_check - target) <= 1e-12 * target

    def test_zero_spectrum_gives_empty_plan(self):
        coeffs = np.zeros(8, dtype=np.complex128)
        from privconv.transforms import Spectrum

        plan = optimal_noise_plan(Spectrum(coeffs, Cyclic(8)), PRIV)
        assert plan.support.size == 0
        assert np.all(plan.scales == 0.0)
        assert plan.budget_check == 0.0

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            NoisePlan(np.array([1.0, 0.0]), np.array([0, 1]), 0.5)  # zero scale on support
        with pytest.raises(ValueError):
            NoisePlan(np.array([-1.0]), np.array([0]), 0.5)

    @given(st.lists(st.floats(0.0, 4.0), min_size=2, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_budget_identity_property(self, mags):
        from privconv.transforms import Spectrum

        arr = np.asarray(mags)
        spectrum = Spectrum(arr.astype(np.complex128), Cyclic(arr.size))
        plan = optimal_noise_plan(spectrum, PRIV)
        if plan.support.size:
            target = PRIV.composition_budget
            assert abs(plan.budget_check - target) <= 1e-9 * target


class TestMirroredNoise:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 7, 8, 16])
    def test_conjugate_symmetry(self, n):
        scales = np.full(n, 1.5)
        z = _mirrored_complex_noise(scales, Seed(5), 4, n)
        for i in range(n):
            assert np.allclose(z[:, i], np.conj(z[:, (n - i) % n]), atol=0)

    def test_self_conjugate_entries_are_real(self):
        z = _mirrored_complex_noise(np.ones(8), Seed(6), 10, 8)
        assert np.all(z[:, 0].imag == 0.0)
        assert np.all(z[:, 4].imag == 0.0)

    def test_second_moment_matches_kappa(self):
        n, trials, b = 16, 200000, 1.25
        z = _mirrored_complex_noise(np.full(n, b), Seed(7), trials, n)
        kappa = _kappa(Cyclic(n))
        second = np.mean(np.abs(z) ** 2, axis=0)
        target = kappa * 2.0 * b * b
        se = 3.0 * target / math.sqrt(trials)  # generous CLT band
        assert np.all(np.abs(second - target) < se)

    def test_kappa_patterns(self):
        assert _kappa(Cyclic(8)).tolist() == [1, 2, 2, 2, 1, 2, 2, 2]
        assert _kappa(Cyclic(7)).tolist() == [1, 2, 2, 2, 2, 2, 2]
        assert _kappa(Cyclic(1)).tolist() == [1]
        assert _kappa(BooleanCube(3)).tolist() == [1] * 8


class TestFourierMechanism:
    def test_sensitivity_premise_of_the_unitary_rows(self):
        # each DFT row has max modulus 1/sqrt(N) and unit l2 norm, the
        # constants behind the per-coefficient budget accounting
        n = 32
        f = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        assert abs(np.max(np.abs(f)) - 1.0 / math.sqrt(n)) < 1e-12
        assert np.allclose(np.linalg.norm(f, axis=1), 1.0, atol=1e-12)

    def test_impulse_exact_mse_includes_pair_factor(self):
        n = 256
        res = fourier_mechanism(zeros(n), impulse_filter(n), PRIV, Seed(1))
        assert abs(res.details["idealized_mse"] - 4.0) < 1e-12
        assert abs(res.theoretical_mse - (8.0 - 8.0 / n)) < 1e-12
        assert abs(res.details["noise_factor"] - (2.0 - 2.0 / n)) < 1e-12

    def test_constant_filter_self_conjugate_only(self):
        # support {0} is self-conjugate: exact variance equals the idealized value
        res = fourier_mechanism(zeros(64), constant_filter(64), PRIV, Seed(2))
        assert abs(res.theoretical_mse - res.details["idealized_mse"]) < 1e-12
        # l1 of the spectrum is sqrt(N), so the idealized value is exactly 4
        assert abs(res.theoretical_mse - 4.0) < 1e-9

    def test_exact_mse_algebra_random_filters(self):
        rng = np.random.default_rng(9)
        for trial in range(5):
            h = RealSequence.cyclic(rng.normal(size=40))
            res = fourier_mechanism(zeros(40), h, PRIV, Seed(trial))
            mags = dft(h).magnitudes
            plan = optimal_noise_plan(dft(h), PRIV)
            expect = float(np.sum(_kappa(Cyclic(40)) * 2.0 * plan.scales**2 * mags**2))
            assert abs(res.theoretical_mse - expect) < 1e-12 * max(expect, 1.0)

    def test_output_is_unbiased_quick(self):
        n, trials = 32, 40000
        rng = np.random.default_rng(10)
        h = RealSequence.cyclic(rng.normal(size=n))
        x = RealSequence.cyclic(rng.normal(size=n))
        outputs, _, _ = sample_outputs("fourier", x, h, PRIV, Seed(3), trials)
        exact = convolve_direct(h, x).values
        dev = outputs.mean(axis=0) - exact
        se = outputs.std(axis=0, ddof=1) / math.sqrt(trials)
        assert np.all(np.abs(dev) < 4.0 * se + 1e-12)

    def test_zero_plan_reproduces_exact_convolution_cyclic(self):
        rng = np.random.default_rng(11)
        h = RealSequence.cyclic(rng.normal(size=16))
        x = RealSequence.cyclic(rng.normal(size=16))
        plan = NoisePlan(np.zeros(16), np.array([], dtype=int), 0.0)
        res = fourier_mechanism(x, h, PRIV, Seed(0), plan=plan)
        assert np.allclose(res.output.values, convolve_direct(h, x).values, atol=1e-12)

    def test_zero_plan_is_bit_exact_on_the_cube(self):
        rng = np.random.default_rng(12)
        h = RealSequence.cube(rng.integers(-4, 5, size=8).astype(float))
        x = RealSequence.cube(rng.integers(0, 9, size=8).astype(float))
        plan = NoisePlan(np.zeros(8), np.array([], dtype=int), 0.0)
        res = fourier_mechanism(x, h, PRIV, Seed(0), plan=plan)
        assert np.array_equal(res.output.values, convolve_direct(h, x).values)

    def test_cube_mse_has_no_pair_factor(self):
        h = RealSequence.cube([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        res = fourier_mechanism(RealSequence.cube(np.zeros(8)), h, PRIV, Seed(4))
        assert abs(res.details["noise_factor"] - 1.0) < 1e-12
        assert abs(res.theoretical_mse - 4.0) < 1e-12

    def test_odd_cube_dimension(self):
        rng = np.random.default_rng(13)
        h = RealSequence.cube(rng.normal(size=32))
        res = fourier_mechanism(RealSequence.cube(np.zeros(32)), h, PRIV, Seed(5))
        assert len(res.output) == 32

    def test_result_json_fields(self):
        res = fourier_mechanism(zeros(8), impulse_filter(8), PRIV, Seed(3, 1))
        payload = res.to_json_dict()
        assert sorted(payload) == [
            "delta",
            "epsilon",
            "mechanism",
            "n",
            "output",
            "seed",
            "theoretical_mse",
        ]
        assert payload["seed"] == {"base": 3, "stream": 1}
        assert payload["n"] == 8
        assert len(payload["output"]) == 8


class TestSpectralPartition:
    def test_eta_value(self):
        state = _spectral_state(impulse_filter(256), PRIV)
        assert abs(state.eta - math.sqrt(18.0)) < 1e-12

    def test_budget_identity(self):
        for n in (2, 8, 64, 256):
            state = _spectral_state(impulse_filter(n), PRIV)
            target = PRIV.composition_budget
            assert abs(state.budget_check - target) <= 1e-12 * target
            logn = int(math.log2(n))
            assert abs((1 + logn) / state.eta**2 - target) <= 1e-12 * target

    def test_rank_scales_follow_dyadic_groups(self):
        n = 16
        state = _spectral_state(random_sign_filter(n, Seed(1)), PRIV)
        eta = state.eta
        expected = np.empty(n)
        expected[0] = eta
        for k in range(1, 5):
            lo, hi = n // 2**k, n // 2 ** (k - 1) - 1
            expected[lo : hi + 1] = eta * 2.0 ** (-k / 2.0)
        assert np.allclose(state.rank_scales, expected, rtol=1e-12)

    def test_scales_sorted_by_magnitude_rank(self):
        rng = np.random.default_rng(14)
        h = RealSequence.cyclic(rng.normal(size=32))
        state = _spectral_state(h, PRIV)
        mags = state.h_hat.magnitudes
        order = state.order
        assert np.all(np.diff(mags[order]) <= 1e-15)

    def test_pair_symmetrization_preserves_pair_budget(self):
        rng = np.random.default_rng(15)
        h = RealSequence.cyclic(rng.normal(size=64))
        state = _spectral_state(h, PRIV)
        raw = np.empty(64)
        raw[state.order] = state.rank_scales
        for i in range(1, 32):
            j = 64 - i
            lhs = 1.0 / state.scales[i] ** 2 + 1.0 / state.scales[j] ** 2
            rhs = 1.0 / raw[i] ** 2 + 1.0 / raw[j] ** 2
            assert abs(lhs - rhs) < 1e-9 * rhs
        # self-conjugate indices keep their rank scales
        assert state.scales[0] == raw[0]
        assert state.scales[32] == raw[32]

    def test_actual_spend_at_most_accounted(self):
        rng = np.random.default_rng(16)
        for trial in range(5):
            h = RealSequence.cyclic(rng.normal(size=128))
            state = _spectral_state(h, PRIV)
            actual = float(np.sum(1.0 / (128 * state.scales**2)))
            assert actual <= state.budget_check * (1 + 1e-12)

    def test_theoretical_between_one_and_four_times_idealized(self):
        rng = np.random.default_rng(17)
        for trial in range(5):
            h = RealSequence.cyclic(rng.normal(size=64))
            res = spectral_partition(zeros(64), h, PRIV, Seed(trial))
            ideal = res.details["idealized_mse"]
            assert ideal * (1 - 1e-12) <= res.theoretical_mse <= 4.0 * ideal * (1 + 1e-12)

    def test_requires_power_of_two(self):
        with pytest.raises(ValueError):
            spectral_partition(zeros(12), RealSequence.cyclic(np.ones(12)), PRIV, Seed(0))

    def test_rejects_cube(self):
        h = RealSequence.cube(np.ones(8))
        x = RealSequence.cube(np.zeros(8))
        with pytest.raises(ValueError):
            spectral_partition(x, h, PRIV, Seed(0))

    def test_noise_lands_on_all_coefficients(self):
        # unlike the optimal plan, zero-magnitude coefficients still get noise
        res = spectral_partition(zeros(8), constant_filter(8), PRIV, Seed(2))
        state = _spectral_state(constant_filter(8), PRIV)
        assert np.all(state.scales > 0)
        assert len(res.output) == 8


class TestBaselines:
    def test_input_perturb_formula(self):
        # ||h||_2 = 1 at N = 64: MSE = 4 * 64 * 1 = 256
        res = baseline_input_perturb(zeros(64), impulse_filter(64), PRIV, Seed(1))
        assert abs(res.theoretical_mse - 256.0) < 1e-12

    def test_output_time_formulas(self):
        res1 = baseline_output_perturb_time(zeros(64), impulse_filter(64), PRIV, Seed(1))
        assert abs(res1.theoretical_mse - 256.0) < 1e-12  # ||h||_inf = 1
        h = RealSequence.cyclic(np.array([3.0, 4.0] + [0.0] * 62))
        res_inf = baseline_output_perturb_time(zeros(64), h, PRIV, Seed(1), neighbor_p=1)
        res_l2 = baseline_output_perturb_time(zeros(64), h, PRIV, Seed(1), neighbor_p=2)
        assert abs(res_inf.theoretical_mse - 256.0 * 16.0) < 1e-9  # max|h|^2 = 16
        assert abs(res_l2.theoretical_mse - 256.0 * 25.0) < 1e-9  # ||h||_2^2 = 25

    def test_output_freq_scales_and_formula(self):
        n = 64
        h = impulse_filter(n)
        res1 = baseline_output_perturb_freq(zeros(n), h, PRIV, Seed(1), neighbor_p=1)
        res2 = baseline_output_perturb_freq(zeros(n), h, PRIV, Seed(1), neighbor_p=2)
        assert abs(res1.details["idealized_mse"] - 4.0) < 1e-12
        assert abs(res2.details["idealized_mse"] - 256.0) < 1e-12
        factor = 2.0 - 2.0 / n
        assert abs(res1.theoretical_mse - 4.0 * factor) < 1e-12
        assert abs(res2.theoretical_mse - 256.0 * factor) < 1e-12

    def test_output_freq_zero_coefficients_get_zero_noise(self):
        h = running_sum_filter(8)  # even nonzero frequencies vanish
        _, scales = _freq_noise_scales(h, PRIV, 1)
        assert scales[2] < 1e-12 and scales[4] < 1e-12 and scales[6] < 1e-12
        assert scales[0] > 0 and scales[1] > 0

    def test_impulse_p1_equals_p2_scaled(self):
        # impulse: |h_hat| flat, so p=2 noise is exactly sqrt(N) times p=1 noise
        n = 16
        _, s1 = _freq_noise_scales(impulse_filter(n), PRIV, 1)
        _, s2 = _freq_noise_scales(impulse_filter(n), PRIV, 2)
        assert np.allclose(s2, math.sqrt(n) * s1, rtol=1e-12)

    def test_neighbor_p_validation(self):
        with pytest.raises(ValueError):
            baseline_output_perturb_time(zeros(8), impulse_filter(8), PRIV, Seed(0), neighbor_p=3)
        with pytest.raises(ValueError):
            baseline_output_perturb_freq(zeros(8), impulse_filter(8), PRIV, Seed(0), neighbor_p=0)

    def test_noise_factor_bounded_by_two(self):
        rng = np.random.default_rng(19)
        for trial in range(5):
            h = RealSequence.cyclic(rng.normal(size=32))
            res = baseline_output_perturb_freq(zeros(32), h, PRIV, Seed(trial))
            assert 1.0 - 1e-12 <= res.details["noise_factor"] <= 2.0 + 1e-12


class TestSampleOutputs:
    @pytest.mark.parametrize("mechanism", MECHANISM_NAMES)
    def test_batch_rows_match_single_runs(self, mechanism):
        rng = np.random.default_rng(20)
        h = random_sign_filter(16, Seed(50))
        x = RealSequence.cyclic(rng.normal(size=16))
        seed = Seed(8, 2)
        outputs, theoretical, _ = sample_outputs(mechanism, x, h, PRIV, seed, 5)
        assert outputs.shape == (5, 16)
        for t in range(5):
            single, single_theo, _ = sample_outputs(mechanism, x, h, PRIV, seed.substream(t), 1)
            assert np.array_equal(outputs[t], single[0])
            assert single_theo == theoretical

    def test_unknown_mechanism(self):
        with pytest.raises(ValueError):
            sample_outputs("nope", zeros(8), impulse_filter(8), PRIV, Seed(0), 1)

    def test_bad_trials(self):
        with pytest.raises(ValueError):
            sample_outputs("fourier", zeros(8), impulse_filter(8), PRIV, Seed(0), 0)

    def test_group_mismatch(self):
        with pytest.raises(ValueError):
            sample_outputs("fourier", zeros(8), impulse_filter(16), PRIV, Seed(0), 1)

    @pytest.mark.parametrize("mechanism", MECHANISM_NAMES)
    def test_theoretical_dispatcher_agrees(self, mechanism):
        h = random_sign_filter(32, Seed(60))
        _, theoretical, _ = sample_outputs(mechanism, zeros(32), h, PRIV, Seed(1), 1)
        assert mechanism_theoretical_mse(mechanism, h, PRIV) == theoretical


class TestKkt:
    def test_constant_filter_is_trivial(self):
        report = kkt_optimality_check(dft(constant_filter(16)), PRIV, 100, Seed(1))
        assert report.trivial
        assert report.worst_improvement == 0.0
        assert report.constraint_residual <= 1e-12

    def test_zero_spectrum_is_trivial(self):
        from privconv.transforms import Spectrum

        report = kkt_optimality_check(Spectrum(np.zeros(8, complex), Cyclic(8)), PRIV, 10, Seed(0))
        assert report.trivial and report.objective == 0.0

    def test_random_perturbations_never_improve(self):
        rng = np.random.default_rng(21)
        for trial in range(5):
            h = RealSequence.cyclic(rng.normal(size=64))
            report = kkt_optimality_check(dft(h), PRIV, 1000, Seed(trial))
            assert not report.trivial
            assert report.trials == 1000
            assert report.worst_improvement <= 1e-9
            assert report.constraint_residual <= 1e-9

    def test_objective_matches_formula(self):
        # at the closed-form optimum, 2 sum |h|^2 b^2 = 4 ln(1/d) l1^2 / (eps^2 N)
        rng = np.random.default_rng(22)
        h = RealSequence.cyclic(rng.normal(size=32))
        report = kkt_optimality_check(dft(h), PRIV, 10, Seed(3))
        assert abs(report.objective - report.formula_objective) < 1e-9 * report.formula_objective

    def test_trials_validation(self):
        with pytest.raises(ValueError):
            kkt_optimality_check(dft(impulse_filter(8)), PRIV, -1, Seed(0))


class TestDeterminism:
    @pytest.mark.parametrize("mechanism", MECHANISM_NAMES)
    def test_same_seed_same_output(self, mechanism):
        h = random_sign_filter(16, Seed(70))
        x = RealSequence.cyclic(np.arange(16, dtype=float))
        a, _, _ = sample_outputs(mechanism, x, h, PRIV, Seed(4, 4), 3)
        b, _, _ = sample_outputs(mechanism, x, h, PRIV, Seed(4, 4), 3)
        assert np.array_equal(a, b)

    def test_different_streams_differ(self):
        h = impulse_filter(16)
        a, _, _ = sample_outputs("fourier", zeros(16), h, PRIV, Seed(4, 0), 1)
        b, _, _ = sample_outputs("fourier", zeros(16), h, PRIV, Seed(4, 1), 1)
        assert not np.array_equal(a, b)
