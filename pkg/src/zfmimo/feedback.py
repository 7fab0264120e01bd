"""Feedback mechanisms: analog over AWGN, quantized (error-free and with
QAM errors), and the two multi-access uplink variants.

Evaluators that only manipulate probabilities or variances are pure;
samplers take an explicit numpy Generator.  Batched helpers (suffix
``_batch``) are what the Monte Carlo engine calls; the scalar operations
mirror them one vector at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import complex_normal
from .exceptions import CapacityError, ParameterError
from .specfun import log_beta_complete, q_tail

__all__ = [
    "AnalogFeedbackOutcome",
    "QuantizationOutcome",
    "FeedbackErrorModel",
    "MacFeedbackOutcome",
    "analog_error_variance",
    "analog_awgn_feedback",
    "rvq_quantize",
    "rvq_expected_distortion",
    "quantize_directions_batch",
    "uniform_directions",
    "qam_error_prob",
    "mac_analog_estimate",
    "mac_feedback_symbols",
    "mac_digital_error_prob",
    "message_error_union_bound",
]

EXPLICIT_CODEBOOK_MAX_BITS = 24


@dataclass(frozen=True)
class AnalogFeedbackOutcome:
    """Base-station channel estimate from analog feedback plus its error variance."""

    bs_estimate: np.ndarray
    error_variance: float


@dataclass(frozen=True)
class QuantizationOutcome:
    """Quantized unit direction, its angular distortion sin^2, and bits spent."""

    direction: np.ndarray
    distortion: float
    bits_used: float


@dataclass(frozen=True)
class FeedbackErrorModel:
    """Per-symbol and whole-message feedback error probabilities."""

    symbol_error_prob: float
    message_error_prob: float
    alpha: float
    beta_fb: float


@dataclass(frozen=True)
class MacFeedbackOutcome:
    """Group estimates from multi-access analog feedback.

    bs_estimates[k] is the length-M channel estimate for terminal k of
    the group; conditional_mmse[k] is its per-coefficient error variance
    given the realized uplink matrix.
    """

    bs_estimates: np.ndarray
    conditional_mmse: np.ndarray
    uplink_matrix: np.ndarray


def _error_model(symbol_p: float, n_symbols: float, alpha: float, beta_fb: float) -> FeedbackErrorModel:
    message = 1.0 - (1.0 - symbol_p) ** n_symbols
    return FeedbackErrorModel(symbol_error_prob=symbol_p,
                              message_error_prob=min(1.0, message),
                              alpha=alpha, beta_fb=beta_fb)


def message_error_union_bound(model: FeedbackErrorModel, m: int) -> float:
    """Union bound beta_fb * (M - 1) * P_s on the message error probability."""
    return min(1.0, model.beta_fb * (m - 1) * model.symbol_error_prob)


def analog_error_variance(beta1: float, beta_fb: float, snr: float, gamma: float = 1.0) -> float:
    """Closed-form error variance of the analog-feedback channel estimate.

    sigma_e^2 = 1/(1 + b*snr) + (b*snr) / ((1 + b*snr)(1 + beta1*snr))
    with b = gamma * beta_fb (reduced uplink power scales the effective
    feedback budget).
    """
    if not beta_fb >= 1:
        raise ParameterError(f"analog feedback requires beta_fb >= 1, got {beta_fb}")
    if not (snr > 0 and gamma > 0 and beta1 >= 1):
        raise ParameterError("analog feedback requires snr > 0, gamma > 0, beta1 >= 1")
    b = gamma * beta_fb
    fb = 1.0 / (1.0 + b * snr)
    if math.isinf(beta1):
        return fb
    return fb + (b * snr) * fb / (1.0 + beta1 * snr)


def analog_awgn_feedback(training, beta1: float, beta_fb: float, snr: float,
                         gamma: float = 1.0, rng: np.random.Generator | None = None
                         ) -> AnalogFeedbackOutcome:
    """Send the terminal's channel estimate over the AWGN uplink, MMSE-decode it.

    ``training`` is the common-training outcome (its estimate is what the
    terminal transmits, scaled to the per-symbol power budget).  Returns
    the base-station estimate; the true channel splits as estimate +
    error with per-component error variance analog_error_variance(...).
    """
    if rng is None:
        raise ParameterError("analog_awgn_feedback needs a random generator")
    sigma_e2 = analog_error_variance(beta1, beta_fb, snr, gamma)
    h_tilde = np.asarray(training.estimate)
    eps_ut = float(training.error_variance)
    b = gamma * beta_fb
    # Transmit kappa * h_tilde at power b * snr per coefficient; the MMSE
    # estimate of h from the uplink observation has variance sigma_e^2.
    kappa = math.sqrt(b * snr / (1.0 - eps_ut))
    g = kappa * h_tilde + complex_normal(rng, *h_tilde.shape)
    bs_estimate = kappa * (1.0 - eps_ut) / (1.0 + b * snr) * g
    return AnalogFeedbackOutcome(bs_estimate=bs_estimate, error_variance=sigma_e2)


# ---------------------------------------------------------------------------
# Random vector quantization


def rvq_expected_distortion(bits: float, m: int) -> tuple[float, float]:
    """Mean angular distortion of a size-2^bits random codebook, exact and bound.

    exact = 2^B * B(2^B, M/(M-1)) evaluated in the log domain; the bound
    is 2^(-B/(M-1)) and always dominates the exact value.  Non-integer
    bit budgets (from symbol-to-bit conversion) are accepted.
    """
    if m < 2 or int(m) != m:
        raise ParameterError(f"distortion law needs m >= 2, got {m}")
    if bits < 0:
        raise ParameterError(f"bits must be nonnegative, got {bits}")
    c = m / (m - 1.0)
    log_n = bits * math.log(2.0)
    if log_n < 700.0:
        log_exact = log_n + log_beta_complete(math.exp(log_n), c)
    else:
        # Gamma-ratio asymptotics: N * B(N, c) -> Gamma(c) * N^(1-c).
        log_exact = math.lgamma(c) - (c - 1.0) * log_n
    bound = 2.0 ** (-bits / (m - 1.0))
    # The two values coincide to within double roundoff for large budgets
    # at m = 2; the clamp keeps the exact <= bound contract exact.
    exact = min(math.exp(log_exact), bound)
    return exact, bound


def _min_beta_sample(rng: np.random.Generator, shape, bits: float, m: int) -> np.ndarray:
    # Distortion of the best of 2^B codewords: minimum of 2^B i.i.d.
    # Beta(M-1, 1) variates, drawn by inverse transform.  expm1 keeps
    # 1 - U^(2^-B) accurate when 2^-B is tiny.
    u = rng.random(shape)
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    return (-np.expm1(np.log(u) * 2.0 ** -bits)) ** (1.0 / (m - 1.0))


def _orthogonal_directions(rng: np.random.Generator, unit: np.ndarray) -> np.ndarray:
    # Uniform unit vectors in the orthogonal complement of each column of
    # `unit` (shape (..., m, k), unit columns).
    w = complex_normal(rng, *unit.shape)
    inner = np.sum(np.conj(unit) * w, axis=-2, keepdims=True)
    w = w - unit * inner
    return w / np.linalg.norm(w, axis=-2, keepdims=True)


def quantize_directions_batch(h: np.ndarray, bits: float, m: int,
                              rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Distributional RVQ of each column of h (shape (..., m, k)).

    Returns unit directions at the quantizer's angular-distortion law
    around each input column, plus the sampled distortions.
    """
    unit = h / np.linalg.norm(h, axis=-2, keepdims=True)
    z = _min_beta_sample(rng, h.shape[:-2] + h.shape[-1:], bits, m)
    ortho = _orthogonal_directions(rng, unit)
    cos = np.sqrt(1.0 - z)[..., None, :]
    sin = np.sqrt(z)[..., None, :]
    return unit * cos + ortho * sin, z


def uniform_directions(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Uniform unit vectors; shape (..., m, k) with unit columns."""
    w = complex_normal(rng, *shape)
    return w / np.linalg.norm(w, axis=-2, keepdims=True)


def rvq_quantize(h_tilde: np.ndarray, bits: float, strategy: str,
                 rng: np.random.Generator) -> QuantizationOutcome:
    """Quantize the direction of h_tilde with a random codebook of 2^bits vectors.

    strategy 'explicit' draws the codebook and picks the best-aligned
    codeword (bits <= 24); 'distributional' samples the distortion law
    directly and synthesizes a direction at that angle, usable for any
    bit budget.
    """
    h_tilde = np.asarray(h_tilde).reshape(-1)
    m = h_tilde.size
    if bits < 0:
        raise ParameterError(f"bits must be nonnegative, got {bits}")
    if strategy == "explicit":
        if bits > EXPLICIT_CODEBOOK_MAX_BITS:
            raise CapacityError(
                f"explicit codebooks are limited to {EXPLICIT_CODEBOOK_MAX_BITS} bits, got {bits}")
        if int(bits) != bits:
            raise ParameterError("explicit codebooks need an integer bit count")
        n = 2 ** int(bits)
        norm2 = float(np.real(np.vdot(h_tilde, h_tilde)))
        best_align = -1.0
        best = None
        for start in range(0, n, 1 << 16):
            count = min(1 << 16, n - start)
            book = uniform_directions(rng, m, count)
            align = np.abs(np.conj(h_tilde) @ book) ** 2
            idx = int(np.argmax(align))
            if align[idx] > best_align:
                best_align = float(align[idx])
                best = book[:, idx].copy()
        distortion = 1.0 - best_align / norm2
        return QuantizationOutcome(direction=best, distortion=float(distortion), bits_used=bits)
    if strategy == "distributional":
        if m < 2:
            raise ParameterError("distributional quantization needs m >= 2")
        direction, z = quantize_directions_batch(h_tilde[:, None], bits, m, rng)
        return QuantizationOutcome(direction=direction[:, 0], distortion=float(z[0]),
                                   bits_used=bits)
    raise ParameterError(f"unknown strategy {strategy!r}; use 'explicit' or 'distributional'")


# ---------------------------------------------------------------------------
# Feedback transmission errors


def qam_error_prob(snr: float, alpha: float, beta_fb: float, m: int,
                   mode: str = "exact") -> FeedbackErrorModel:
    """Error model for feedback sent as uncoded square QAM.

    The constellation carries alpha/beta_fb * log2(snr) bits per symbol,
    i.e. q = snr^(alpha/beta_fb) points.  'exact' evaluates the square-QAM
    symbol error rate with tail argument sqrt(3*snr/(q-1)) (the squared
    form would be inconsistent with the exponential bound); 'bound' uses
    P_s <= 2 exp(-1.5 * snr^(1 - alpha/beta_fb)).  The message error over
    beta_fb*(M-1) symbols is 1 - (1 - P_s)^(beta_fb*(M-1)).
    """
    if m < 2 or int(m) != m:
        raise ParameterError(f"qam_error_prob needs m >= 2, got {m}")
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    if not 1.0 <= alpha <= beta_fb:
        raise ParameterError(f"alpha must satisfy 1 <= alpha <= beta_fb, got {alpha}, {beta_fb}")
    q = snr ** (alpha / beta_fb)
    if q < 2.0:
        raise ParameterError(
            f"constellation size q = snr^(alpha/beta_fb) = {q:.3f} < 2: cannot signal")
    if mode == "exact":
        tail = q_tail(math.sqrt(3.0 * snr / (q - 1.0)))
        ps = 1.0 - (1.0 - 2.0 * (1.0 - 1.0 / math.sqrt(q)) * tail) ** 2
    elif mode == "bound":
        ps = min(1.0, 2.0 * math.exp(-1.5 * snr ** (1.0 - alpha / beta_fb)))
    else:
        raise ParameterError(f"unknown mode {mode!r}; use 'exact' or 'bound'")
    return _error_model(ps, beta_fb * (m - 1), alpha, beta_fb)


def mac_digital_error_prob(snr: float, alpha: float, beta_fb: float, m: int) -> FeedbackErrorModel:
    """Message error probability for jointly decoded digital feedback on the fading uplink.

    Each terminal signals with multiplexing gain alpha/beta_fb; the
    optimal receive-diversity exponent gives
    P_e = snr^(-M (1 - alpha/beta_fb)), sub-polynomial factor fixed to 1,
    clamped to [0, 1].
    """
    if m < 1 or int(m) != m:
        raise ParameterError(f"mac_digital_error_prob needs m >= 1, got {m}")
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    if not 0 < alpha < beta_fb:
        raise ParameterError(
            f"joint decoding requires alpha < beta_fb, got alpha={alpha}, beta_fb={beta_fb}")
    pe = min(1.0, snr ** (-m * (1.0 - alpha / beta_fb)))
    n_symbols = beta_fb * (m - 1) if m > 1 else 1.0
    # Implied i.i.d.-equivalent per-symbol rate, so the union-bound
    # relation between the two fields keeps holding.
    ps = 1.0 - (1.0 - pe) ** (1.0 / n_symbols) if pe < 1.0 else 1.0
    return _error_model(ps, n_symbols, alpha, beta_fb)


# ---------------------------------------------------------------------------
# Multi-access analog feedback


def mac_feedback_symbols(observations: np.ndarray, eps_ut: float, beta_fb: float,
                         snr: float) -> tuple[np.ndarray, float]:
    """Scale terminal estimates into uplink symbols with power beta_fb * P each.

    ``observations`` has shape (..., M, L): column k holds terminal k's
    channel estimate (error variance eps_ut per coefficient).  Returns
    the (..., L, M) symbol matrix b[k, j] plus the cross-correlation
    coefficient c = E[h b*] needed by the MMSE decoder.
    """
    if not 0.0 <= eps_ut < 1.0:
        raise ParameterError(f"estimate error variance must lie in [0, 1), got {eps_ut}")
    kappa = math.sqrt(beta_fb * snr / (1.0 - eps_ut))
    symbols = kappa * np.swapaxes(observations, -1, -2)
    return symbols, kappa * (1.0 - eps_ut)


def mac_analog_estimate(uplink: np.ndarray, symbols: np.ndarray, beta1: float,
                        beta_fb: float, snr: float,
                        rng: np.random.Generator) -> MacFeedbackOutcome:
    """Jointly MMSE-decode one group's analog feedback from the fading uplink.

    uplink is the M x L uplink channel matrix A (known at the base
    station); symbols is the L x M matrix of transmitted feedback
    symbols from mac_feedback_symbols.  Per coefficient j the receiver
    sees g_j = A b_j + noise and forms
        hhat[k, j] = c * a_k^H (beta_fb P A A^H + I)^(-1) g_j ,
    with conditional error variance
        sigma_k^2(A) = 1 - c^2 a_k^H (beta_fb P A A^H + I)^(-1) a_k .
    """
    a = np.asarray(uplink)
    b = np.asarray(symbols)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ParameterError(f"uplink {a.shape} and symbols {b.shape} are not conformable")
    m, l = a.shape
    if l > m:
        raise ParameterError(f"group size L={l} cannot exceed antenna count M={m}")
    if not (snr > 0 and beta_fb >= 1):
        raise ParameterError("mac feedback requires snr > 0 and beta_fb >= 1")
    eps_ut = 0.0 if math.isinf(beta1) else 1.0 / (1.0 + beta1 * snr)
    c = math.sqrt(beta_fb * snr * (1.0 - eps_ut))
    g = a @ b + complex_normal(rng, m, b.shape[1])
    gram = beta_fb * snr * (a @ np.conj(a.T)) + np.eye(m)
    try:
        solved_g = np.linalg.solve(gram, g)
        solved_a = np.linalg.solve(gram, a)
    except np.linalg.LinAlgError as exc:  # cannot occur for snr > 0
        raise ParameterError(f"regularized uplink Gram matrix is singular: {exc}") from exc
    estimates = c * (np.conj(a.T) @ solved_g)
    quad = np.real(np.sum(np.conj(a) * solved_a, axis=0))
    mmse = 1.0 - (c * c) * quad
    return MacFeedbackOutcome(bs_estimates=estimates, conditional_mmse=mmse, uplink_matrix=a)
