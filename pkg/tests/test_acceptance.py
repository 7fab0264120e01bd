"""Acceptance suite: one test per criterion, each printing a summary line.

Run with `pytest tests/test_acceptance.py -v` (add -rA to see the
printed values).  Criterion 7a is expected to fail: the demanded
log-log slope tolerance is tighter than what the prediction-error curve
mathematically allows on the stated noise window; see the assertion
message for the analysis.  Everything else must pass.
"""

import math
import time

import numpy as np
import pytest

from zfmimo import bounds, channel, feedback as fb, montecarlo as mc
from zfmimo.params import (AnalogAWGN, DigitalErrorFree, DigitalQAM, MacAnalog,
                           Perfect, SystemParams)
from zfmimo.timecorr import GaussMarkov, Jakes, prediction_error

INF = math.inf
M = 4


def perfect_csir(snr_db, **kw):
    return SystemParams(m=M, snr_db=snr_db, beta1=INF, beta2=INF, **kw)


def genie(params, scheme, trials, seed=0, process=None):
    kw = {} if process is None else {"process": process}
    return mc.simulate_genie_rate(mc.SimConfig(params=params, scheme=scheme,
                                               trials=trials, seed=seed, **kw))


def report(n, detail):
    print(f"criterion {n}: PASS - {detail}")


def test_criterion_1_bound_formula_regression():
    start = time.perf_counter()
    p = SystemParams(m=4, snr_db=10.0, beta1=1.0, beta2=1.0, beta_fb=1.0)
    gap = bounds.gap_analog_awgn(p).gap_bits
    limit = bounds.gap_analog_awgn(p, regime="high-snr-limit").gap_bits
    elapsed = time.perf_counter() - start
    assert gap == pytest.approx(1.3386, abs=1e-4)
    assert limit == pytest.approx(math.log2(2.75), abs=1e-9)
    # amortized per-evaluation cost well under a millisecond
    t0 = time.perf_counter()
    for _ in range(200):
        bounds.gap_analog_awgn(p)
    per_call = (time.perf_counter() - t0) / 200
    assert per_call < 1e-3
    report(1, f"gap={gap:.6f} bits, limit={limit:.6f} bits, "
              f"{per_call * 1e6:.0f} us/call (first call {elapsed * 1e3:.2f} ms)")


def test_criterion_2_one_bit_gap_and_bracketing():
    start = time.perf_counter()
    # Perfect receiver knowledge, one feedback symbol per coefficient:
    # the comparison bound is exactly one bit per user.
    gap_bits = bounds.analog_csir_gap_bound(1.0)
    assert gap_bits == pytest.approx(1.0, abs=1e-12)
    margins = []
    for snr_db in range(0, 31, 5):
        p = perfect_csir(float(snr_db), beta_fb=1.0)
        ideal = bounds.zf_ideal_rate(p.snr, M)
        est = genie(p, AnalogAWGN(), trials=1_000_000, seed=snr_db)
        slack = 3 * est.ci95_halfwidth / 1.96
        assert ideal - 1.0 <= est.mean + slack
        assert est.mean - slack <= ideal
        margins.append(est.mean - (ideal - 1.0))
    elapsed = time.perf_counter() - start
    assert elapsed < 120
    report(2, f"1-bit lower bound bracketed at 0..30 dB; min margin "
              f"{min(margins):.3f} bits; {elapsed:.0f} s")


def test_criterion_3_digital_beats_analog_with_two_symbols():
    start = time.perf_counter()
    trials = 1_000_000
    alpha_grid = (1.0, 1.25, 1.5, 1.75, 2.0)
    rows = []
    for snr_db in (10.0, 15.0, 20.0, 25.0, 30.0):
        p = perfect_csir(snr_db, beta_fb=2.0)
        analog = genie(p, AnalogAWGN(), trials)
        digital = genie(p, DigitalErrorFree(), trials)
        pooled = math.hypot(analog.ci95_halfwidth, digital.ci95_halfwidth)
        assert digital.mean - analog.mean > 2 * pooled, \
            f"digital does not clear analog at {snr_db} dB"
        qam_best = max(
            genie(SystemParams(m=M, snr_db=snr_db, beta1=INF, beta2=INF,
                               beta_fb=2.0, alpha=alpha), DigitalQAM(), trials).mean
            for alpha in alpha_grid)
        assert qam_best > analog.mean, \
            f"QAM envelope below analog at {snr_db} dB"
        rows.append((snr_db, digital.mean - analog.mean, qam_best - analog.mean))
    elapsed = time.perf_counter() - start
    assert elapsed < 600
    detail = ", ".join(f"{d:.0f}dB:+{dd:.3f}/+{dq:.3f}" for d, dd, dq in rows)
    report(3, f"digital/envelope margins over analog (bits/user) {detail}; {elapsed:.0f} s")


def test_criterion_4_mac_analog_constant_sum_gap():
    start = time.perf_counter()
    gaps = []
    for snr_db in (20.0, 30.0):
        p = perfect_csir(snr_db, beta_fb=3.0, group_size=2)
        sum_gap = M * bounds.gap_mac_analog(p).gap_bits
        assert sum_gap == pytest.approx(0.7, abs=0.15)
        gaps.append(sum_gap)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(4, f"sum-rate gap {gaps[0]:.3f} bits at 20 dB, {gaps[1]:.3f} bits at 30 dB")


def test_criterion_5_wishart_mmse_validation():
    start = time.perf_counter()
    trials = 1_000_000
    rng = np.random.default_rng(2024)
    for (l, m) in ((1, 2), (2, 4), (4, 4)):
        a = channel.complex_normal(rng, trials, m, l)
        lam = np.linalg.eigvalsh(np.swapaxes(a.conj(), -1, -2) @ a)
        for rho in (1.0, 10.0, 100.0):
            samples = np.mean(1.0 / (1.0 + rho * lam), axis=-1)
            se = np.std(samples) / math.sqrt(trials)
            closed = bounds.wishart_mmse(rho, l, m).value
            assert abs(np.mean(samples) - closed) < 3 * se, \
                f"(L={l}, M={m}, rho={rho}): {np.mean(samples)} vs {closed}"
        del a, lam
    rho = 1e6
    product = rho * bounds.wishart_mmse(rho, 2, 4).value
    assert product == pytest.approx(0.5, rel=0.01)
    elapsed = time.perf_counter() - start
    assert elapsed < 60
    report(5, f"closed form within 3 SE of {trials} eigenvalue draws at 9 points; "
              f"rho*mmse(1e6)={product:.4f}; {elapsed:.0f} s")


def test_criterion_6_full_group_genie_gap_certification():
    start = time.perf_counter()
    p0 = SystemParams(m=M, snr_db=0.0, beta1=1.0, beta2=1.0, beta_fb=1.0, group_size=M)
    grid_db = list(range(0, 81, 5))
    genie_gap = [bounds.genie_gap_bound_mac_full(p0.at_snr_db(float(db))) for db in grid_db]
    assert all(math.isfinite(g) for g in genie_gap)
    assert max(genie_gap[-3:]) - min(genie_gap[-3:]) < 0.01  # flat over last 10 dB
    # The rate-gap bound for full groups grows no faster than log2 log2 snr.
    gap40 = bounds.gap_mac_analog(p0.at_snr_db(40.0)).gap_bits
    gap80 = bounds.gap_mac_analog(p0.at_snr_db(80.0)).gap_bits
    loglog = lambda db: math.log2(math.log2(10 ** (db / 10)))
    ratio = (gap80 - gap40) / (loglog(80.0) - loglog(40.0))
    assert 0.9 <= ratio <= 1.1
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(6, f"genie-gap sup {max(genie_gap):.3f} bits (flat tail); "
              f"log2log2 growth ratio {ratio:.3f}")


def test_criterion_7a_prediction_error_scaling_slope():
    # EXPECTED FAILURE (defect in the stated tolerance): on
    # delta in [1e-6, 1e-3] the prediction error is
    #   eps1 = delta^(1-2F) * (kappa - delta^(2F)) + O(delta),
    # and the second factor still varies across the window because
    # delta^(2F) decays only like exp(-2F ln(1/delta)) (2F = 0.037).
    # The fitted slope is therefore (1-2F) - 2F*delta^(2F)/(kappa -
    # delta^(2F)) ~ 0.905, i.e. 6.0% below 1-2F = 0.963; reaching 5%
    # would need delta below ~1e-12.  The asymptotic law itself is
    # verified by the two-sided bounds (timecorr tests) and by the
    # multiplexing-gain slope in criterion 7b.
    f = 0.0185
    process = Jakes(doppler=f)
    deltas = np.logspace(-6, -3, 20)
    eps = np.array([prediction_error(process, float(d)) for d in deltas])
    slope = float(np.polyfit(np.log(deltas), np.log(eps), 1)[0])
    target = 1 - 2 * f
    print(f"criterion 7a: fitted slope {slope:.4f} vs 1-2F = {target:.4f} "
          f"({abs(slope - target) / target:.1%} off, tolerance 5%)")
    assert abs(slope - target) <= 0.05 * target, (
        f"slope {slope:.4f} is {abs(slope - target) / target:.1%} from 1-2F={target}; "
        "the 5% window tolerance is unattainable on delta in [1e-6, 1e-3] "
        "(see test docstring/comment)")


def test_criterion_7b_delayed_multiplexing_gain_slope():
    start = time.perf_counter()
    f = 0.0185
    process = Jakes(doppler=f)

    def sum_lower_bound(snr_db):
        p = SystemParams(m=M, snr_db=snr_db, beta1=1.0, beta2=INF, delay=1)
        gap = bounds.gap_with_prediction(p, process, 1, scheme="perfect").gap_bits
        return M * (bounds.zf_ideal_rate(p.snr, M) - gap)

    slope = (sum_lower_bound(50.0) - sum_lower_bound(30.0)) / 20.0
    target = M * (1 - 2 * f) * math.log2(10.0) / 10.0
    assert slope == pytest.approx(target, rel=0.10)
    elapsed = time.perf_counter() - start
    assert elapsed < 60
    report("7b", f"delayed sum-rate slope {slope:.4f} bits/dB vs "
                 f"M(1-2F)log2(10)/10 = {target:.4f} (within 10%)")


def test_criterion_8_regular_process_saturation():
    start = time.perf_counter()
    r = 0.9966
    process = GaussMarkov(r=r)
    ceiling = bounds.regular_ceiling(M, 1 - r * r)
    p60 = SystemParams(m=M, snr_db=60.0, beta1=1.0, beta2=INF, delay=1)
    est = genie(p60, Perfect(), trials=1_000_000, process=process)
    assert est.mean <= ceiling + est.ci95_halfwidth

    def lower_bound(snr_db):
        p = SystemParams(m=M, snr_db=snr_db, beta1=1.0, beta2=INF, delay=1)
        gap = bounds.gap_with_prediction(p, process, 1, scheme="perfect").gap_bits
        return bounds.zf_ideal_rate(p.snr, M) - gap

    saturation = abs(lower_bound(40.0) - lower_bound(60.0))
    assert saturation < 0.05
    elapsed = time.perf_counter() - start
    assert elapsed < 300
    report(8, f"genie {est.mean:.3f} <= ceiling {ceiling:.3f} bits/user; "
              f"|LB(40dB)-LB(60dB)| = {saturation:.3f} bits; {elapsed:.0f} s")


def test_criterion_9_property_suites():
    start = time.perf_counter()
    # Zero-forcing orthogonality residuals over 1e4 seeds per size.
    rng = np.random.default_rng(99)
    for m in (2, 4, 8):
        h = channel.complex_normal(rng, 10_000, m, m)
        v = channel.zf_directions_batch(h)
        residual = np.swapaxes(np.conj(h), -1, -2) @ v
        idx = np.arange(m)
        residual[:, idx, idx] = 0.0
        assert np.max(np.abs(residual)) < 1e-10
    # The batched directions coincide with the deterministic per-matrix
    # beamformers (up to the fixed phase convention).
    for seed in range(100):
        h = channel.sample_channel(4, np.random.default_rng(seed))
        align = np.abs(np.sum(np.conj(channel.zf_beamformers(h))
                              * channel.zf_directions_batch(h[None])[0], axis=0))
        assert np.max(np.abs(align - 1)) < 1e-9

    # Bracketing lower <= genie <= ideal across the grids of criteria 2-4.
    trials = 200_000
    checks = 0
    for snr_db in range(0, 31, 5):
        p = perfect_csir(float(snr_db), beta_fb=1.0)
        est = genie(p, AnalogAWGN(), trials, seed=snr_db)
        ideal = bounds.zf_ideal_rate(p.snr, M)
        lower = ideal - bounds.gap_analog_awgn(p).gap_bits
        slack = 3 * est.ci95_halfwidth / 1.96
        assert lower - slack <= est.mean <= ideal + slack
        checks += 1
    for snr_db in (10.0, 15.0, 20.0, 25.0, 30.0):
        p = perfect_csir(snr_db, beta_fb=2.0)
        ideal = bounds.zf_ideal_rate(p.snr, M)
        est = genie(p, DigitalErrorFree(), trials)
        slack = 3 * est.ci95_halfwidth / 1.96
        assert ideal - bounds.gap_digital(p).gap_bits - slack <= est.mean <= ideal + slack
        pq = SystemParams(m=M, snr_db=snr_db, beta1=INF, beta2=INF,
                          beta_fb=2.0, alpha=1.5)
        est_q = genie(pq, DigitalQAM(), trials)
        model = fb.qam_error_prob(pq.snr, 1.5, 2.0, M)
        lower_q = ideal - bounds.gap_digital_errors(pq, model).gap_bits
        slack = 3 * est_q.ci95_halfwidth / 1.96
        assert lower_q - slack <= est_q.mean <= ideal + slack
        checks += 2
    for snr_db in (20.0, 30.0):
        p = perfect_csir(snr_db, beta_fb=3.0, group_size=2)
        est = genie(p, MacAnalog(), trials)
        ideal = bounds.zf_ideal_rate(p.snr, M)
        lower = ideal - bounds.gap_mac_analog(p).gap_bits
        slack = 3 * est.ci95_halfwidth / 1.96
        assert lower - slack <= est.mean <= ideal + slack
        checks += 1

    # Quantizer distortion matches the exact codebook law.
    rng = np.random.default_rng(7)
    for (m, bits) in ((2, 1), (4, 4), (4, 12)):
        h = channel.complex_normal(rng, 400_000, m, 1)
        directions, _ = fb.quantize_directions_batch(h, float(bits), m, rng)
        unit = h / np.linalg.norm(h, axis=-2, keepdims=True)
        distortion = 1 - np.abs(np.sum(np.conj(unit) * directions, axis=-2)) ** 2
        exact, _ = fb.rvq_expected_distortion(bits, m)
        se = np.std(distortion) / math.sqrt(distortion.size)
        assert abs(np.mean(distortion) - exact) < 3 * se, (m, bits)

    # Mixture inequality for unit-mean nonnegative weights.
    sampler = lambda g, n: g.exponential(size=n)
    for lam in (0.0, 0.5, 1.0):
        lhs, rhs = mc.lemma2_property_check(sampler, 1.0, lam, 400_000)
        pooled = math.hypot(lhs.ci95_halfwidth, rhs.ci95_halfwidth)
        assert lhs.mean <= rhs.mean + 3 * pooled

    elapsed = time.perf_counter() - start
    assert elapsed < 600
    report(9, f"orthogonality, {checks} bracketing points, quantizer law, "
              f"mixture inequality; {elapsed:.0f} s")
