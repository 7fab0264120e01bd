"""Monte Carlo engine for genie-aided rates and validation moments.

Trials run in fixed-size batches (BATCH_TRIALS).  Every batch derives
its generators from (seed, stream tag, batch index), so a run is
reproducible bit-for-bit for a given SimConfig no matter how batches are
scheduled, and schemes sharing a seed see identical channel draws
(common random numbers).  Streams are separated by purpose: channel,
terminal-side estimation noise, feedback-link noise, codebooks, error
events, uplink fading, and resampling.

Per trial the engine samples the channel, forms each terminal's
estimate, applies the feedback scheme to produce the transmitter's
channel state, computes zero-forcing beamformers from it, and evaluates
the genie rate

    mean_k log2(1 + |a_kk|^2 snr/M / (1 + sum_{j!=k} |a_kj|^2 snr/M))

with a_kj the exact coupling coefficients (the genie grants them to the
terminals, so no dedicated-training loss enters here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import complex_normal, zf_directions_batch
from .exceptions import NumericalError, ParameterError
from .params import (AnalogAWGN, DigitalErrorFree, DigitalQAM, MacAnalog,
                     MacDigital, Perfect, Scheme, SystemParams, TDD)
from .timecorr import BLOCK_IID, BlockIID, FadingProcess, GaussMarkov, Jakes, delay_error
from . import bounds
from . import feedback as fb

__all__ = [
    "SimConfig",
    "EstimateWithCI",
    "simulate_genie_rate",
    "estimate_cross_coupling",
    "lemma2_property_check",
    "ut_error_variance",
    "BATCH_TRIALS",
]

BATCH_TRIALS = 1 << 16

_STREAMS = {"channel": 0, "training": 1, "feedback": 2, "codebook": 3,
            "error": 4, "uplink": 5, "resample": 6}


@dataclass(frozen=True)
class SimConfig:
    """One reproducible simulation: model knobs, scheme, process, trials, seed."""

    params: SystemParams
    scheme: Scheme
    process: FadingProcess = BLOCK_IID
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class EstimateWithCI:
    """Sample mean with a 1.96 * std / sqrt(n) confidence halfwidth."""

    mean: float
    ci95_halfwidth: float
    trials: int
    resampled: int = 0


def _rng(seed: int, tag: str, batch: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_STREAMS[tag], batch))
    return np.random.Generator(np.random.Philox(ss))


def ut_error_variance(process: FadingProcess, beta1: float, snr: float, delay: int) -> float:
    """Terminal-side estimation error variance eps_d at delta = 1/(beta1*snr).

    Block-i.i.d. fading with no delay reproduces the one-shot training
    error 1/(1 + beta1*snr); infinite beta1 gives the noiseless
    filtering/prediction limits.
    """
    if delay not in (0, 1):
        raise ParameterError(f"delay must be 0 or 1, got {delay}")
    if math.isinf(beta1):
        if isinstance(process, BlockIID):
            return 0.0 if delay == 0 else 1.0
        if delay == 0:
            return 0.0
        if isinstance(process, GaussMarkov):
            return 1.0 - process.r ** 2
        if isinstance(process, Jakes):
            return 0.0  # band-limited: noiseless past determines the future
        return delay_error(process, 1e-300, delay)
    return delay_error(process, 1.0 / (beta1 * snr), delay)


class _Moments:
    """Streaming mean/variance with pairwise batch merging."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add_batch(self, x: np.ndarray):
        n = x.size
        bmean = float(np.mean(x))
        bm2 = float(np.var(x)) * n
        total = self.count + n
        delta = bmean - self.mean
        self.mean += delta * n / total
        self.m2 += bm2 + delta * delta * self.count * n / total
        self.count = total

    def result(self, resampled: int = 0) -> EstimateWithCI:
        if self.count < 2:
            return EstimateWithCI(self.mean, math.inf, self.count, resampled)
        std = math.sqrt(self.m2 / (self.count - 1))
        return EstimateWithCI(self.mean, 1.96 * std / math.sqrt(self.count),
                              self.count, resampled)


def _draw_channel_pair(config: SimConfig, batch: int, n: int, eps_ut: float,
                       stream: str = "channel", noise_stream: str = "training"):
    """Sample (h, h_tilde) jointly: h is CN(0,1), h_tilde the terminal estimate
    with error variance eps_ut, drawn conditionally so the channel stream is
    shared across schemes."""
    m = config.params.m
    h = complex_normal(_rng(config.seed, stream, batch), n, m, m)
    if eps_ut <= 0.0:
        return h, h
    if eps_ut >= 1.0:
        raise ParameterError(
            "terminal estimate carries no information (eps_d = 1); "
            "this scheme/process/delay combination cannot feed back")
    g2 = complex_normal(_rng(config.seed, noise_stream, batch), n, m, m)
    h_tilde = (1.0 - eps_ut) * h + math.sqrt(eps_ut * (1.0 - eps_ut)) * g2
    return h, h_tilde


def _quantize_batch(config: SimConfig, batch: int, h_tilde: np.ndarray, bits: float):
    scheme = config.scheme
    strategy = getattr(scheme, "strategy", "auto")
    rng = _rng(config.seed, "codebook", batch)
    m = config.params.m
    if strategy == "explicit":
        out = np.empty_like(h_tilde)
        for t in range(h_tilde.shape[0]):
            for k in range(m):
                out[t, :, k] = fb.rvq_quantize(h_tilde[t, :, k], bits, "explicit", rng).direction
        return out
    directions, _ = fb.quantize_directions_batch(h_tilde, bits, m, rng)
    return directions


def _csit_batch(config: SimConfig, batch: int, n: int, eps_ut: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (true channel, transmitter CSIT) for one batch of trials."""
    params, scheme = config.params, config.scheme
    m, snr = params.m, params.snr

    if isinstance(scheme, Perfect):
        # Noiseless feedback: CSIT equals the terminal estimate (the
        # channel itself under perfect receiver-side knowledge).
        return _draw_channel_pair(config, batch, n, eps_ut)

    if isinstance(scheme, TDD):
        if not isinstance(config.process, BlockIID) or params.delay != 0:
            raise ParameterError("the reciprocal-training scheme is defined for "
                                 "block-i.i.d. fading without delay")
        h, _ = _draw_channel_pair(config, batch, n, 0.0)
        amp = math.sqrt(scheme.beta_tdd * snr)
        w = complex_normal(_rng(config.seed, "feedback", batch), n, m, m)
        return h, amp / (1.0 + scheme.beta_tdd * snr) * (amp * h + w)

    h, h_tilde = _draw_channel_pair(config, batch, n, eps_ut)

    if isinstance(scheme, AnalogAWGN):
        b = params.gamma * params.beta_fb
        if not b > 0:
            raise ParameterError("analog feedback needs a positive budget")
        kappa = math.sqrt(b * snr / (1.0 - eps_ut)) if eps_ut < 1.0 else math.nan
        w = complex_normal(_rng(config.seed, "feedback", batch), n, m, m)
        g = kappa * h_tilde + w
        return h, kappa * (1.0 - eps_ut) / (1.0 + b * snr) * g

    if isinstance(scheme, DigitalErrorFree):
        bits = scheme.bits
        if bits is None:
            bits = bounds.digital_bits_from_symbols(params.beta_fb, m, snr)
        return h, _quantize_batch(config, batch, h_tilde, bits)

    if isinstance(scheme, (DigitalQAM, MacDigital)):
        if isinstance(scheme, DigitalQAM):
            model = fb.qam_error_prob(snr, params.alpha, params.beta_fb, m,
                                      mode=scheme.ser_mode)
        else:
            model = fb.mac_digital_error_prob(snr, params.alpha, params.beta_fb, m)
        bits = bounds.qam_bits(params.alpha, m, snr)
        if bits < 0:
            raise ParameterError(f"negative bit budget at snr = {snr}; need snr > 1")
        hhat = _quantize_batch(config, batch, h_tilde, bits)
        err_rng = _rng(config.seed, "error", batch)
        errors = err_rng.random((n, m)) < model.message_error_prob
        # An errored message leaves the transmitter with an unrelated
        # direction, modeled as uniform on the sphere.
        garbage = fb.uniform_directions(err_rng, n, m, m)
        return h, np.where(errors[:, None, :], garbage, hhat)

    if isinstance(scheme, MacAnalog):
        l = params.group_size
        if l is None:
            raise ParameterError("mac-analog simulation needs params.group_size")
        if not params.beta_fb >= 1:
            raise ParameterError("mac feedback requires beta_fb >= 1")
        kappa = math.sqrt(params.beta_fb * snr / (1.0 - eps_ut))
        c = kappa * (1.0 - eps_ut)
        up_rng = _rng(config.seed, "uplink", batch)
        w_rng = _rng(config.seed, "feedback", batch)
        hhat = np.empty_like(h)
        eye = np.eye(m)
        for g0 in range(0, m, l):
            cols = slice(g0, g0 + l)
            a = complex_normal(up_rng, n, m, l)
            b_sym = kappa * np.swapaxes(h_tilde[:, :, cols], -1, -2)
            g = a @ b_sym + complex_normal(w_rng, n, m, m)
            gram = params.beta_fb * snr * (a @ np.conj(np.swapaxes(a, -1, -2))) + eye
            est = c * (np.conj(np.swapaxes(a, -1, -2)) @ np.linalg.solve(gram, g))
            hhat[:, :, cols] = np.swapaxes(est, -1, -2)
        return h, hhat

    raise ParameterError(f"unsupported scheme {scheme!r}")


def _genie_rates(h: np.ndarray, hhat: np.ndarray, snr: float) -> np.ndarray:
    v = zf_directions_batch(hhat)
    a = np.conj(np.swapaxes(h, -1, -2)) @ v
    p = np.abs(a) ** 2 * (snr / h.shape[-1])
    sig = np.einsum("...kk->...k", p)
    interference = p.sum(axis=-1) - sig
    return np.log2(1.0 + sig / (1.0 + interference)).mean(axis=-1)


def _coupling_power(h: np.ndarray, hhat: np.ndarray, pair: tuple[int, int]) -> np.ndarray:
    v = zf_directions_batch(hhat)
    k, j = pair
    a_kj = np.sum(np.conj(h[:, :, k]) * v[:, :, j], axis=-1)
    return np.abs(a_kj) ** 2


def _run(config: SimConfig, statistic) -> EstimateWithCI:
    eps_ut = ut_error_variance(config.process, config.params.beta1,
                               config.params.snr, config.params.delay)
    moments = _Moments()
    resampled = 0
    n_batches = -(-config.trials // BATCH_TRIALS)
    for batch in range(n_batches):
        n = min(BATCH_TRIALS, config.trials - batch * BATCH_TRIALS)
        h, hhat = _csit_batch(config, batch, n, eps_ut)
        x = statistic(h, hhat)
        bad = ~np.isfinite(x)
        if np.any(bad):
            # Rank-deficient CSIT draws: replace the affected trials from
            # the dedicated resample stream (probability ~0 events).
            idx = np.flatnonzero(bad)
            resampled += idx.size
            if resampled > max(10, 1e-6 * config.trials):
                raise NumericalError(
                    f"{resampled} rank-deficient trials out of {config.trials}")
            sub = SimConfig(params=config.params, scheme=config.scheme,
                            process=config.process, trials=config.trials,
                            seed=config.seed + 0x5eed)
            h2, hhat2 = _csit_batch(sub, batch, n, eps_ut)
            x = np.asarray(x)
            x[idx] = statistic(h2[idx], hhat2[idx])
            if not np.all(np.isfinite(x)):
                raise NumericalError("resampled trials remained rank deficient")
        moments.add_batch(x)
    return moments.result(resampled)


def simulate_genie_rate(config: SimConfig) -> EstimateWithCI:
    """Genie-aided achievable rate estimate, bits per channel use per user."""
    snr = config.params.snr
    return _run(config, lambda h, hhat: _genie_rates(h, hhat, snr))


def estimate_cross_coupling(config: SimConfig, pair: tuple[int, int]) -> EstimateWithCI:
    """Empirical E|h_k^H v_j|^2 for a user/beam pair with j != k."""
    k, j = pair
    m = config.params.m
    if not (0 <= k < m and 0 <= j < m) or k == j:
        raise ParameterError(f"pair must be distinct indices below m={m}, got {pair}")
    return _run(config, lambda h, hhat: _coupling_power(h, hhat, pair))


def lemma2_property_check(sampler, a: float, lam: float, trials: int,
                          seed: int = 0) -> tuple[EstimateWithCI, EstimateWithCI]:
    """Estimate E[log(1 + X A)] and E[log(1 + (lam + (1-lam) X) A)], in nats.

    sampler(rng, n) must return n nonnegative draws with unit mean.  The
    mixture side dominates the plain side for any such X, any A > 0 and
    lam in [0, 1]; both sides share the same draws so the comparison is
    paired.
    """
    if not a > 0:
        raise ParameterError(f"a must be positive, got {a}")
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")
    lhs, rhs = _Moments(), _Moments()
    n_batches = -(-trials // BATCH_TRIALS)
    for batch in range(n_batches):
        n = min(BATCH_TRIALS, trials - batch * BATCH_TRIALS)
        x = np.asarray(sampler(_rng(seed, "channel", batch), n), dtype=float)
        if x.shape != (n,) or np.any(x < 0):
            raise ParameterError("sampler must return n nonnegative draws")
        lhs.add_batch(np.log1p(x * a))
        rhs.add_batch(np.log1p((lam + (1.0 - lam) * x) * a))
    return lhs.result(), rhs.result()
