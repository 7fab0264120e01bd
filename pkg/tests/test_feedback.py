import math

import numpy as np
import pytest

from zfmimo.exceptions import CapacityError, ParameterError
from zfmimo import bounds, channel, feedback as fb
from zfmimo.channel import common_training


def rng_for(seed):
    return np.random.default_rng(seed)


class TestAnalogAwgn:
    def test_error_variance_value(self):
        assert fb.analog_error_variance(1.0, 1.0, 10.0) == pytest.approx(
            1 / 11 + 10 / 121, rel=1e-12)

    def test_perfect_feedback_limit(self):
        val = fb.analog_error_variance(1.0, 1e12, 10.0)
        assert val == pytest.approx(1 / 11, rel=1e-10)

    def test_uplink_power_factor(self):
        # Reduced uplink power acts exactly like a smaller feedback budget.
        assert fb.analog_error_variance(2.0, 4.0, 10.0, gamma=0.25) == \
            fb.analog_error_variance(2.0, 1.0, 10.0, gamma=1.0)

    def test_empirical_error_variance(self):
        # E per-component |h - hhat|^2 matches the closed form within 3
        # standard errors at (beta1=1, beta_fb=2, snr=10).
        n = 1_000_000
        rng = rng_for(0)
        h = channel.complex_normal(rng, n)
        training = common_training(h, 1.0, 10.0, rng)
        out = fb.analog_awgn_feedback(training, 1.0, 2.0, 10.0, rng=rng)
        err = np.abs(h - out.bs_estimate) ** 2
        se = np.std(err) / np.sqrt(n)
        assert abs(np.mean(err) - out.error_variance) < 3 * se

    def test_estimate_error_orthogonality(self):
        n = 1_000_000
        rng = rng_for(1)
        h = channel.complex_normal(rng, n)
        training = common_training(h, 1.0, 10.0, rng)
        out = fb.analog_awgn_feedback(training, 1.0, 1.0, 10.0, rng=rng)
        prod = out.bs_estimate * np.conj(h - out.bs_estimate)
        for part in (prod.real, prod.imag):
            assert abs(np.mean(part)) < 3 * np.std(part) / np.sqrt(n)

    def test_domain_error(self):
        with pytest.raises(ParameterError):
            fb.analog_error_variance(1.0, 0.5, 10.0)


class TestRvqQuantize:
    def test_explicit_two_codewords(self):
        # M=2, B=1: mean distortion 1/3 (minimum of two uniform variates).
        rng = rng_for(2)
        n = 20_000
        vals = np.empty(n)
        for i in range(n):
            h = channel.complex_normal(rng, 2)
            vals[i] = fb.rvq_quantize(h, 1, "explicit", rng).distortion
        se = np.std(vals) / np.sqrt(n)
        assert abs(np.mean(vals) - 1 / 3) < 3 * se

    def test_zero_bits(self):
        # A single random codeword: mean distortion (M-1)/M.
        rng = rng_for(3)
        m, n = 4, 20_000
        vals = np.empty(n)
        for i in range(n):
            h = channel.complex_normal(rng, m)
            vals[i] = fb.rvq_quantize(h, 0, "explicit", rng).distortion
        se = np.std(vals) / np.sqrt(n)
        assert abs(np.mean(vals) - (m - 1) / m) < 3 * se

    def test_distributional_matches_exact_law(self):
        rng = rng_for(4)
        m = 4
        h = channel.complex_normal(rng, 100_000, m, 1)
        _, z = fb.quantize_directions_batch(h, 12.0, m, rng)
        exact, _ = fb.rvq_expected_distortion(12, m)
        se = np.std(z) / np.sqrt(z.size)
        assert abs(np.mean(z) - exact) < 3 * se

    def test_explicit_vs_distributional(self):
        # The two strategies draw from the same distortion law.
        rng = rng_for(5)
        m, bits = 4, 12
        n_exp = 10_000
        vals = np.empty(n_exp)
        for i in range(n_exp):
            h = channel.complex_normal(rng, m)
            vals[i] = fb.rvq_quantize(h, bits, "explicit", rng).distortion
        h = channel.complex_normal(rng, 400_000, m, 1)
        _, z = fb.quantize_directions_batch(h, float(bits), m, rng)
        pooled_se = math.hypot(np.std(vals) / math.sqrt(n_exp),
                               np.std(z) / math.sqrt(z.size))
        assert abs(np.mean(vals) - np.mean(z)) < 3 * pooled_se

    def test_outcome_consistency(self):
        rng = rng_for(6)
        h = channel.complex_normal(rng, 4)
        out = fb.rvq_quantize(h, 6, "explicit", rng)
        assert np.linalg.norm(out.direction) == pytest.approx(1.0, abs=1e-12)
        recomputed = 1 - np.abs(np.vdot(h, out.direction)) ** 2 / np.vdot(h, h).real
        assert out.distortion == pytest.approx(recomputed, abs=1e-12)
        out_d = fb.rvq_quantize(h, 40.5, "distributional", rng)
        assert np.linalg.norm(out_d.direction) == pytest.approx(1.0, abs=1e-12)

    def test_explicit_bit_guard(self):
        with pytest.raises(CapacityError):
            fb.rvq_quantize(np.ones(4, dtype=complex), 30, "explicit", rng_for(0))


class TestRvqExpectedDistortion:
    def test_two_antennas_one_bit(self):
        exact, bound = fb.rvq_expected_distortion(1, 2)
        assert exact == pytest.approx(1 / 3, rel=1e-12)
        assert bound == pytest.approx(0.5, rel=1e-15)

    def test_zero_bits(self):
        for m in (2, 3, 4, 8):
            exact, _ = fb.rvq_expected_distortion(0, m)
            assert exact == pytest.approx((m - 1) / m, rel=1e-12)

    def test_exact_below_bound(self):
        for m in (2, 4, 6):
            for bits in (0, 1, 4, 12, 40, 120.5):
                exact, bound = fb.rvq_expected_distortion(bits, m)
                assert 0 < exact <= bound

    def test_large_budget_asymptotic_path(self):
        exact, bound = fb.rvq_expected_distortion(2000, 4)
        assert 0 < exact <= bound < 1e-200

    def test_forty_bits_reference(self):
        exact, bound = fb.rvq_expected_distortion(40, 4)
        assert bound == pytest.approx(2.0 ** (-40 / 3), rel=1e-15)
        assert exact <= bound


class TestQamErrorProb:
    def test_bound_reference_values(self):
        model = fb.qam_error_prob(100.0, 1.0, 2.0, 4, mode="bound")
        assert model.symbol_error_prob == pytest.approx(2 * math.exp(-15), rel=1e-12)

    def test_capacity_signaling_floor(self):
        # alpha = beta_fb: the bound is SNR independent.
        for snr in (16.0, 1e4):
            model = fb.qam_error_prob(snr, 2.0, 2.0, 4, mode="bound")
            assert model.symbol_error_prob == pytest.approx(2 * math.exp(-1.5), rel=1e-12)

    def test_union_bound(self):
        model = fb.qam_error_prob(100.0, 2.0, 4.0, 4, mode="bound")
        union = fb.message_error_union_bound(model, 4)
        assert union == pytest.approx(12 * model.symbol_error_prob, rel=1e-12)
        assert model.message_error_prob <= union

    def test_exact_below_exponential_bound(self):
        for snr_db in np.linspace(7, 40, 12):
            snr = 10 ** (snr_db / 10)
            exact = fb.qam_error_prob(snr, 1.0, 2.0, 4, mode="exact")
            bound = fb.qam_error_prob(snr, 1.0, 2.0, 4, mode="bound")
            assert exact.symbol_error_prob <= bound.symbol_error_prob

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            fb.qam_error_prob(100.0, 0.5, 2.0, 4)
        with pytest.raises(ParameterError):
            fb.qam_error_prob(100.0, 3.0, 2.0, 4)
        with pytest.raises(ParameterError):
            fb.qam_error_prob(1.5, 1.0, 2.0, 4)  # q < 2


class TestMacDigitalErrorProb:
    def test_reference_value(self):
        model = fb.mac_digital_error_prob(100.0, 4.0, 8.0, 4)
        assert model.message_error_prob == pytest.approx(1e-4, rel=1e-12)

    def test_full_rate_clamps_to_one(self):
        model = fb.mac_digital_error_prob(100.0, 8.0 * (1 - 1e-12), 8.0, 4)
        assert model.message_error_prob == pytest.approx(1.0, abs=1e-6)

    def test_receive_diversity_exponent(self):
        for m in (2, 4):
            for snr in (10.0, 1e3):
                model = fb.mac_digital_error_prob(snr, 2.0, 4.0, m)
                assert model.message_error_prob == pytest.approx(
                    snr ** (-m * 0.5), rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ParameterError):
            fb.mac_digital_error_prob(100.0, 8.0, 8.0, 4)


class TestMacAnalogEstimate:
    def test_scalar_specialization(self):
        # L = M = 1 with noiseless terminal estimate:
        # sigma^2(A) = 1 / (1 + beta_fb * snr * |a|^2).
        rng = rng_for(7)
        a = np.array([[0.8 - 0.4j]])
        h = np.array([[0.5 + 0.1j]])
        symbols, _ = fb.mac_feedback_symbols(h, 0.0, 2.0, 10.0)
        out = fb.mac_analog_estimate(a, symbols, math.inf, 2.0, 10.0, rng)
        expected = 1 / (1 + 2.0 * 10.0 * abs(a[0, 0]) ** 2)
        assert out.conditional_mmse[0] == pytest.approx(expected, rel=1e-12)

    def test_conditional_mmse_range(self):
        rng = rng_for(8)
        for _ in range(200):
            a = channel.complex_normal(rng, 4, 2)
            h = channel.complex_normal(rng, 4, 2)
            symbols, _ = fb.mac_feedback_symbols(h, 1 / 11, 1.0, 10.0)
            out = fb.mac_analog_estimate(a, symbols, 1.0, 1.0, 10.0, rng)
            assert np.all(out.conditional_mmse > 0)
            assert np.all(out.conditional_mmse <= 1 + 1e-12)

    def test_average_matches_wishart_closed_form(self):
        # Averaging the conditional MMSE over the uplink matrix reproduces
        # sigma1^2 + (1 - sigma1^2) * mmse(beta_fb * snr).
        l, m, snr = 2, 4, 10.0
        rng = rng_for(9)
        n = 100_000
        a = channel.complex_normal(rng, n, m, l)
        gram = snr * (a @ np.conj(np.swapaxes(a, -1, -2))) + np.eye(m)
        solved = np.linalg.solve(gram, a)
        quad_form = np.real(np.sum(np.conj(a) * solved, axis=1))
        s1 = 1 / 11
        c2 = snr * (1 - s1)
        sigma = 1 - c2 * quad_form
        target = s1 + (1 - s1) * bounds.wishart_mmse(snr, l, m).value
        se = np.std(sigma) / np.sqrt(sigma.size)
        assert abs(np.mean(sigma) - target) < 3 * se
        # and the batched formula agrees with the public operation
        symbols, _ = fb.mac_feedback_symbols(channel.complex_normal(rng, m, l),
                                             s1, 1.0, snr)
        out = fb.mac_analog_estimate(a[0], symbols, 1.0, 1.0, snr, rng)
        assert out.conditional_mmse == pytest.approx(sigma[0], rel=1e-10)

    def test_dimension_error(self):
        rng = rng_for(10)
        with pytest.raises(ParameterError):
            fb.mac_analog_estimate(np.ones((2, 3), dtype=complex),
                                   np.ones((3, 2), dtype=complex), 1.0, 1.0, 10.0, rng)
