"""Closed-form achievable-rate and rate-gap expressions.

Every public function reports bits per channel use, per user (multiply
by M for sum rates).  Internally the math runs in nats.  A GapBound is
always log2(1 + sum of labeled nonnegative components), so each bound's
makeup is inspectable.

The rate gap is measured against the equal-power zero-forcing rate with
ideal channel knowledge; subtracting a gap from ``zf_ideal_rate`` gives
an achievable-rate lower bound, while ``genie`` Monte Carlo estimates
(montecarlo module) upper-bound the same rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, ParameterError
from .params import SystemParams
from .specfun import digamma, exp_int_scaled
from .timecorr import FadingProcess, Jakes, delay_error
from . import feedback as fb

__all__ = [
    "GapBound",
    "WishartMmse",
    "zf_ideal_rate",
    "gap_analog_awgn",
    "gap_digital",
    "gap_digital_errors",
    "detected_rate_lower_bound",
    "analog_csir_gap_bound",
    "digital_csir_gap_bound",
    "wishart_mmse",
    "wishart_mmse_high_snr_product",
    "gap_mac_analog",
    "optimal_group_size",
    "genie_gap_bound_mac_full",
    "gap_with_prediction",
    "regular_ceiling",
    "digital_bits_from_symbols",
    "qam_bits",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class GapBound:
    """A rate-gap upper bound log2(1 + sum(components)), in bits per channel use."""

    gap_bits: float
    components: dict
    regime: str = "finite"  # 'finite' | 'high-snr-limit'

    def __post_init__(self):
        for name, value in self.components.items():
            if value < 0:
                raise NumericalError(f"negative gap component {name} = {value}")


def _gap(components: dict, regime: str = "finite") -> GapBound:
    total = sum(components.values())
    return GapBound(gap_bits=math.log1p(total) / LN2, components=dict(components), regime=regime)


@dataclass(frozen=True)
class WishartMmse:
    """Average of 1/(1 + rho*lambda) over eigenvalues of an L x L Wishart matrix."""

    rho: float
    l: int
    m: int
    value: float
    method: str


def _sigma(beta: float, snr: float) -> float:
    """Training-phase MMSE 1/(1 + beta*snr); 0 for infinite pilots."""
    if math.isinf(beta):
        return 0.0
    return 1.0 / (1.0 + beta * snr)


def zf_ideal_rate(snr: float, m: int) -> float:
    """Per-user ergodic zero-forcing rate with ideal channel knowledge, in bits.

    Rayleigh fading at per-user SNR snr/M: e^(M/snr) * E_1(M/snr) nats.
    """
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    if m < 1 or int(m) != m:
        raise ParameterError(f"antenna count must be a positive integer, got {m}")
    return exp_int_scaled(1, m / snr) / LN2


# ---------------------------------------------------------------------------
# AWGN feedback channel


def gap_analog_awgn(params: SystemParams, mode: str = "fdd", regime: str = "finite") -> GapBound:
    """Rate-gap upper bound for analog feedback over the AWGN uplink.

    mode 'fdd' is the closed-loop system (common training + analog
    feedback at uplink SNR gamma*snr); 'tdd' is the open-loop reciprocal
    system where params.beta_fb plays the per-terminal uplink pilot
    count.  regime 'high-snr-limit' returns the SNR-independent bound.
    """
    m, snr = params.m, params.snr
    if not params.beta1 >= 1:
        raise ParameterError(f"analog feedback requires beta1 >= 1, got {params.beta1}")
    if mode == "fdd":
        if not params.beta_fb >= 1:
            raise ParameterError(f"analog feedback requires beta_fb >= 1, got {params.beta_fb}")
        if regime == "high-snr-limit":
            return _gap({
                "dedicated_training": 0.0 if math.isinf(params.beta2) else 1.0 / (m * params.beta2),
                "csir": 0.0 if math.isinf(params.beta1) else (m - 1) / m / params.beta1,
                "feedback": (m - 1) / m / (params.gamma * params.beta_fb),
            }, regime="high-snr-limit")
        sigma_e2 = fb.analog_error_variance(params.beta1, params.beta_fb, snr, params.gamma)
        return _gap({
            "dedicated_training": snr / m * _sigma(params.beta2, snr),
            "csit_mismatch": snr / m * (m - 1) * sigma_e2,
        })
    if mode == "tdd":
        beta_tdd = params.beta_fb
        if not beta_tdd > 0:
            raise ParameterError(f"TDD requires a positive pilot count, got {beta_tdd}")
        if regime == "high-snr-limit":
            return _gap({
                "dedicated_training": 0.0 if math.isinf(params.beta2) else 1.0 / (m * params.beta2),
                "csit_mismatch": (m - 1) / m / beta_tdd,
            }, regime="high-snr-limit")
        return _gap({
            "dedicated_training": snr / m * _sigma(params.beta2, snr),
            "csit_mismatch": snr / m * (m - 1) * _sigma(beta_tdd, snr),
        })
    raise ParameterError(f"unknown mode {mode!r}; use 'fdd' or 'tdd'")


def digital_bits_from_symbols(beta_fb: float, m: int, snr: float) -> float:
    """Bit budget of an error-free feedback link at capacity: beta_fb*(M-1)*log2(1+snr)."""
    return beta_fb * (m - 1) * math.log2(1.0 + snr)


def qam_bits(alpha: float, m: int, snr: float) -> float:
    """Bit budget of the uncoded-QAM feedback link: alpha*(M-1)*log2(snr)."""
    return alpha * (m - 1) * math.log2(snr)


def gap_digital(params: SystemParams, bits: float | None = None,
                distortion: str = "exact") -> GapBound:
    """Rate-gap upper bound for quantized, error-free feedback.

    bits = None converts the symbol budget at capacity,
    B = beta_fb*(M-1)*log2(1+snr).  distortion 'exact' uses the
    log-domain Beta value of the random-codebook law; 'bound' uses
    2^(-B/(M-1)) (and, in the from-symbols case, equals the
    snr/(1+snr)^beta_fb form).
    """
    m, snr = params.m, params.snr
    if m < 2:
        raise ParameterError("quantized direction feedback needs m >= 2")
    if bits is None:
        if not params.beta_fb >= 1:
            raise ParameterError(f"symbol conversion requires beta_fb >= 1, got {params.beta_fb}")
        bits = digital_bits_from_symbols(params.beta_fb, m, snr)
    exact, bound = fb.rvq_expected_distortion(bits, m)
    if distortion == "exact":
        d = exact
    elif distortion == "bound":
        d = bound
    else:
        raise ParameterError(f"unknown distortion mode {distortion!r}")
    s1 = _sigma(params.beta1, snr)
    return _gap({
        "dedicated_training": snr / m * _sigma(params.beta2, snr),
        "csir": snr / m * (m - 1) * s1,
        "quantization": snr * (1.0 - s1) * d,
    })


def gap_digital_errors(params: SystemParams, error_model: fb.FeedbackErrorModel,
                       distortion: str = "exact") -> GapBound:
    """Rate-gap upper bound for quantized feedback with message errors.

    Error-free frames contribute the quantization and imperfect-CSIR
    terms scaled by (1 - P_e); erroneous frames contribute snr * P_e
    (useless CSIT bounded by unit coupling power).  Bit budget
    B = alpha*(M-1)*log2(snr); with P_e = 0 this reduces exactly to the
    error-free gap at that budget.
    """
    m, snr = params.m, params.snr
    if m < 2:
        raise ParameterError("quantized direction feedback needs m >= 2")
    pe = error_model.message_error_prob
    bits = qam_bits(error_model.alpha, m, snr)
    if bits < 0:
        raise ParameterError(f"negative bit budget at snr = {snr}; need snr > 1")
    exact, bound = fb.rvq_expected_distortion(bits, m)
    s1 = _sigma(params.beta1, snr)
    if distortion == "exact":
        quant = snr * (1.0 - s1) * exact
    elif distortion == "bound":
        quant = snr * bound  # the looser snr^(1-alpha) form
    else:
        raise ParameterError(f"unknown distortion mode {distortion!r}")
    return _gap({
        "dedicated_training": snr / m * _sigma(params.beta2, snr),
        "quantization": (1.0 - pe) * quant,
        "csir": (1.0 - pe) * snr / m * (m - 1) * s1,
        "feedback_error": snr * pe,
    })


def detected_rate_lower_bound(params: SystemParams, error_model: fb.FeedbackErrorModel) -> float:
    """Achievable rate (bits/use) when terminals detect and discard errored frames.

    (1 - P_e) * [ideal rate - log2(1 + 1/(M beta2) + (M-1)/(M beta1) + snr^(1-alpha))].
    """
    m, snr = params.m, params.snr
    pe = error_model.message_error_prob
    inner = (0.0 if math.isinf(params.beta2) else 1.0 / (m * params.beta2)) \
        + (0.0 if math.isinf(params.beta1) else (m - 1) / (m * params.beta1)) \
        + snr ** (1.0 - error_model.alpha)
    return (1.0 - pe) * (zf_ideal_rate(snr, m) - math.log1p(inner) / LN2)


def analog_csir_gap_bound(beta_fb: float) -> float:
    """Perfect-CSIR comparison bound for analog feedback: log2(1 + 1/beta_fb) bits."""
    if not beta_fb >= 1:
        raise ParameterError(f"analog feedback requires beta_fb >= 1, got {beta_fb}")
    return math.log1p(1.0 / beta_fb) / LN2


def digital_csir_gap_bound(beta_fb: float, snr: float) -> float:
    """Perfect-CSIR comparison bound for error-free digital feedback.

    log2(1 + snr/(1+snr)^beta_fb); vanishes at high SNR for beta_fb > 1.
    """
    if not beta_fb >= 1:
        raise ParameterError(f"digital feedback requires beta_fb >= 1, got {beta_fb}")
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    return math.log1p(snr / (1.0 + snr) ** beta_fb) / LN2


# ---------------------------------------------------------------------------
# Wishart eigenvalue MMSE and the multi-access feedback bounds


def _wishart_coefficient(k: int, l: int, m: int, ll: int, mm: int) -> float:
    # Signed coefficient of the eigenvalue-density expansion for an
    # ll x ll central Wishart matrix with mm degrees of freedom.
    num = math.factorial(2 * l) * math.factorial(mm - ll + m)
    den = ll * (2.0 ** (2 * k - m)) * math.factorial(l) * math.factorial(m) \
        * math.factorial(mm - ll + l)
    return ((-1) ** m) * num / den * math.comb(2 * (k - l), k - l) \
        * math.comb(2 * (mm - ll + l), 2 * l - m)


def _wishart_mmse_closed(rho: float, l: int, m: int) -> tuple[float, float]:
    # Returns (value, cancellation ratio sum|terms| / |sum|).
    total = 0.0
    abs_total = 0.0
    x = 1.0 / rho
    for k in range(l):
        for j in range(k + 1):
            for i in range(2 * j + 1):
                term = _wishart_coefficient(k, j, i, l, m) * exp_int_scaled(m - l + i + 1, x)
                total += term
                abs_total += abs(term)
    value = total / rho
    ratio = abs_total / abs(total) if total != 0 else math.inf
    return value, ratio


def _wishart_mmse_monte_carlo(rho: float, l: int, m: int, trials: int, seed: int) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(l, m)))
    total = 0.0
    remaining = trials
    while remaining > 0:
        n = min(remaining, 1 << 15)
        a = (rng.standard_normal((n, m, l)) + 1j * rng.standard_normal((n, m, l))) * np.sqrt(0.5)
        lam = np.linalg.eigvalsh(np.swapaxes(a.conj(), -1, -2) @ a)
        total += float(np.sum(1.0 / (1.0 + rho * lam))) / l
        remaining -= n
    return total / trials


def wishart_mmse(rho: float, l: int, m: int, method: str = "closed-form",
                 trials: int = 200_000, seed: int = 0) -> WishartMmse:
    """Average estimation MMSE 1/L sum_k E[1/(1 + rho*lambda_k)].

    lambda_k are eigenvalues of A^H A with A an M x L standard complex
    Gaussian matrix.  The closed form is a signed triple sum over scaled
    exponential integrals; when alternating cancellation eats more than
    6 digits (or for L >= 8, where it always does) the Monte Carlo
    evaluator takes over with a warning.
    """
    if not rho > 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    if not 1 <= l <= m:
        raise ParameterError(f"need 1 <= L <= M, got L={l}, M={m}")
    if method == "closed-form":
        if l < 8:
            value, ratio = _wishart_mmse_closed(rho, l, m)
            if ratio < 1e6 and 0.0 < value <= 1.0 + 1e-9:
                return WishartMmse(rho=rho, l=l, m=m, value=min(value, 1.0), method="closed-form")
            warnings.warn(
                f"wishart_mmse closed form lost {math.log10(max(ratio, 1.0)):.0f} digits "
                f"at (L={l}, M={m}, rho={rho:g}); falling back to Monte Carlo",
                RuntimeWarning, stacklevel=2)
        else:
            warnings.warn(
                f"wishart_mmse closed form is unreliable for L >= 8 (got L={l}); "
                "using Monte Carlo", RuntimeWarning, stacklevel=2)
        method = "monte-carlo"
    if method == "monte-carlo":
        value = _wishart_mmse_monte_carlo(rho, l, m, trials, seed)
        return WishartMmse(rho=rho, l=l, m=m, value=value, method="monte-carlo")
    raise ParameterError(f"unknown method {method!r}; use 'closed-form' or 'monte-carlo'")


def wishart_mmse_high_snr_product(l: int, m: int, rho: float | None = None) -> float:
    """Limit behavior of rho * mmse(rho): 1/(M-L) for L < M; for L = M the
    slow-growth expansion -gamma + ln(rho) + sum of coefficient ratios."""
    if not 1 <= l <= m:
        raise ParameterError(f"need 1 <= L <= M, got L={l}, M={m}")
    if l < m:
        return 1.0 / (m - l)
    if rho is None:
        raise ParameterError("the L = M expansion needs rho")
    const = sum(_wishart_coefficient(k, j, i, l, m) / i
                for k in range(l) for j in range(k + 1) for i in range(1, 2 * j + 1))
    return -np.euler_gamma + math.log(rho) + const


def gap_mac_analog(params: SystemParams, regime: str = "finite") -> GapBound:
    """Rate-gap upper bound for analog feedback over the fading multi-access uplink.

    Groups of L terminals feed back simultaneously; the base station
    MMSE-decodes using the known uplink matrix.  A finite beta_up models
    uplink-channel training instead, rescaling the effective feedback
    SNR inside the Wishart MMSE term.  regime 'high-snr-limit' returns
    the L < M constant.
    """
    m, snr, l = params.m, params.snr, params.group_size
    if l is None:
        raise ParameterError("gap_mac_analog needs params.group_size (L)")
    if not params.beta_fb >= 1:
        raise ParameterError(f"mac analog feedback requires beta_fb >= 1, got {params.beta_fb}")
    if regime == "high-snr-limit":
        if l >= m:
            raise ParameterError("the high-SNR constant exists only for L < M")
        return _gap({
            "dedicated_training": 0.0 if math.isinf(params.beta2) else 1.0 / (m * params.beta2),
            "csir": 0.0 if math.isinf(params.beta1) else (m - 1) / m / params.beta1,
            "feedback": (m - 1) / m / (params.beta_fb * (m - l)),
        }, regime="high-snr-limit")
    rho = params.beta_fb * snr
    if params.beta_up is not None and not math.isinf(params.beta_up):
        bu = params.beta_up * snr
        rho *= bu / (1.0 + bu + l * params.beta_fb * snr)
    mmse = wishart_mmse(rho, l, m).value
    s1 = _sigma(params.beta1, snr)
    return _gap({
        "dedicated_training": snr / m * _sigma(params.beta2, snr),
        "csir": snr / m * (m - 1) * s1,
        "feedback": snr / m * (m - 1) * (1.0 - s1) * mmse,
    })


def optimal_group_size(m: int, total_budget_factor: float = 2.0) -> int:
    """Group size minimizing the high-SNR gap at a fixed total budget a*M (a >= 2).

    With beta_fb = a*L/M the gap constant is minimized by maximizing
    L*(M - L) over 1 <= L <= M-1, i.e. L* = M/2.
    """
    if m < 2:
        raise ParameterError(f"group-size optimization needs m >= 2, got {m}")
    if total_budget_factor < 2.0:
        raise ParameterError("at least two groups (budget factor >= 2) are needed for L < M")
    candidates = range(1, m)
    return max(candidates, key=lambda l: l * (m - l))


def genie_gap_bound_mac_full(params: SystemParams) -> float:
    """Upper bound (bits) on ideal rate minus genie-aided rate for full groups (L = M).

    Three terms: a polynomial log, the minimum-eigenvalue average
    E[log(1 + c*lambda_min)] with lambda_min exponential of mean 1
    (evaluated as the scaled exponential integral), and the matching
    subtraction at the raw feedback SNR.  Bounded in SNR even though the
    L = M rate-gap bound is not.
    """
    m, snr = params.m, params.snr
    beta1, beta_fb = params.beta1, params.beta_fb
    if not (beta1 >= 1 and beta_fb >= 1):
        raise ParameterError("genie gap bound requires beta1 >= 1 and beta_fb >= 1")
    csir = 0.0 if math.isinf(beta1) else (m - 1) / (m * beta1)
    t1 = math.log1p(csir + (m - 1) / m * snr)
    c = (1.0 + csir) * beta_fb * snr / (1.0 + csir + (m - 1) / m * snr)
    t2 = exp_int_scaled(1, 1.0 / c)
    t3 = exp_int_scaled(1, 1.0 / (beta_fb * snr))
    return (t1 + t2 - t3) / LN2


# ---------------------------------------------------------------------------
# Delayed feedback


def gap_with_prediction(params: SystemParams, process: FadingProcess, d: int,
                        scheme: str = "perfect") -> GapBound:
    """Rate-gap upper bound when the terminal estimate is a d-frame prediction.

    The terminal-side estimation error 1/(1 + beta1*snr) is replaced by
    the filtering (d = 0) or one-step prediction (d = 1) error
    eps_d(delta) at delta = 1/(beta1*snr).  scheme selects which static
    gap the substitution applies to: 'perfect' (feedback link noiseless),
    'analog', 'digital', or 'mac-analog'.
    """
    if d not in (0, 1):
        raise ParameterError(f"delay must be 0 or 1, got {d}")
    m, snr = params.m, params.snr
    if math.isinf(params.beta1):
        raise ParameterError("prediction substitution needs finite beta1 (noisy observations)")
    delta = 1.0 / (params.beta1 * snr)
    eps = delay_error(process, delta, d)
    dedicated = snr / m * _sigma(params.beta2, snr)
    if scheme == "perfect":
        return _gap({"dedicated_training": dedicated,
                     "prediction": snr * (m - 1) / m * eps})
    if scheme == "analog":
        b = params.gamma * params.beta_fb
        if not b > 0:
            raise ParameterError("analog scheme needs a positive feedback budget")
        sigma_fb = 1.0 / (1.0 + b * snr)
        sigma_e2 = sigma_fb + (1.0 - sigma_fb) * eps
        return _gap({"dedicated_training": dedicated,
                     "csit_mismatch": snr / m * (m - 1) * sigma_e2})
    if scheme == "digital":
        bits = digital_bits_from_symbols(params.beta_fb, m, snr)
        exact, _ = fb.rvq_expected_distortion(bits, m)
        return _gap({"dedicated_training": dedicated,
                     "csir": snr / m * (m - 1) * eps,
                     "quantization": snr * (1.0 - eps) * exact})
    if scheme == "mac-analog":
        l = params.group_size
        if l is None:
            raise ParameterError("mac-analog scheme needs params.group_size")
        mmse = wishart_mmse(params.beta_fb * snr, l, m).value
        return _gap({"dedicated_training": dedicated,
                     "csir": snr / m * (m - 1) * eps,
                     "feedback": snr / m * (m - 1) * (1.0 - eps) * mmse})
    raise ParameterError(f"unknown scheme {scheme!r} for prediction substitution")


def doppler_multiplexing_gain(m: int, process: FadingProcess) -> float:
    """Achievable sum-rate pre-log with one-frame-delayed feedback: M(1 - 2F)."""
    if isinstance(process, Jakes):
        return m * (1.0 - 2.0 * process.doppler)
    raise ParameterError("multiplexing-gain lower bound applies to band-limited processes")


def regular_ceiling(m: int, eps1_at_zero: float) -> float:
    """High-SNR rate ceiling (bits/use/user) for delayed feedback on a regular process.

    log(1/eps1(0) + M - 1) - psi(M) + 1/(2M-1) + 1/(2M-2), in nats,
    converted to bits.  Diverges as eps1(0) -> 0 (band-limited processes
    have no finite ceiling).
    """
    if m < 2 or int(m) != m:
        raise ParameterError(f"ceiling needs m >= 2, got {m}")
    if not 0.0 < eps1_at_zero <= 1.0:
        raise ParameterError(
            f"noiseless prediction error must lie in (0, 1], got {eps1_at_zero}")
    nats = math.log(1.0 / eps1_at_zero + m - 1.0) - digamma(float(m)) \
        + 1.0 / (2 * m - 1) + 1.0 / (2 * m - 2)
    return nats / LN2
