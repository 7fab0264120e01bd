"""Fading-process spectra and noisy Wiener prediction/filtering errors.

A fading process here is the scalar, unit-variance stationary Gaussian
process followed independently by every channel coefficient, described
by its power spectral density S(xi) on xi in [-1/2, 1/2] (frequency in
cycles per frame) with integral 1.

The central quantity is the noisy one-step prediction error

    eps1(delta) = exp( int_{-1/2}^{1/2} log(delta + S(xi)) dxi ) - delta

where delta is the per-observation noise variance, and the filtering
error eps0 = delta*eps1 / (delta + eps1).  Band-limited ("Doppler")
spectra with maximum frequency F < 1/2 use the equivalent form

    eps1(delta) = delta^(1-2F) * exp( int_{-F}^{F} log(delta + S) dxi ) - delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .exceptions import NumericalError, ParameterError
from .specfun import bessel_j0

__all__ = [
    "FadingProcess",
    "BlockIID",
    "Jakes",
    "GaussMarkov",
    "TabulatedSpectrum",
    "BLOCK_IID",
    "prediction_error",
    "filtering_error",
    "gauss_markov_prediction_error",
    "doppler_from_mobility",
    "load_tabulated_spectrum",
]

SPEED_OF_LIGHT = 299_792_458.0  # m/s

_QUAD_TOL = 1e-9


@dataclass(frozen=True)
class FadingProcess:
    """Base tag for fading-process kinds."""

    kind: str = "base"

    @property
    def param(self) -> float:
        """Scalar parameter used in result tables (0 where not applicable)."""
        return 0.0


@dataclass(frozen=True)
class BlockIID(FadingProcess):
    """Independent fading from frame to frame (flat unit spectrum)."""

    kind: str = "iid"


@dataclass(frozen=True)
class Jakes(FadingProcess):
    """Classical isotropic-scattering spectrum, band-limited to [-F, F].

    S(xi) = 1 / (pi * sqrt(F^2 - xi^2)) for |xi| <= F; lag-1
    autocorrelation J0(2 pi F).
    """

    kind: str = "jakes"
    doppler: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.doppler < 0.5:
            raise ParameterError(f"Jakes doppler must lie in (0, 1/2), got {self.doppler}")

    @property
    def param(self) -> float:
        return self.doppler


@dataclass(frozen=True)
class GaussMarkov(FadingProcess):
    """First-order autoregressive fading h(t) = r h(t-1) + sqrt(1-r^2) w(t)."""

    kind: str = "gauss-markov"
    r: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ParameterError(f"GaussMarkov correlation must lie in (0, 1), got {self.r}")

    @property
    def param(self) -> float:
        return self.r

    def spectrum(self, xi: np.ndarray) -> np.ndarray:
        r = self.r
        return (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(2.0 * np.pi * xi) + r * r)


@dataclass(frozen=True)
class TabulatedSpectrum(FadingProcess):
    """User-supplied spectrum sampled on a grid over [-1/2, 1/2].

    Integrals over the table use the trapezoid rule, so accuracy is set
    by the grid resolution, not by the module's quadrature tolerance.
    """

    kind: str = "tabulated"
    xi: tuple = ()
    s: tuple = ()

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if xi.ndim != 1 or xi.size < 3 or xi.shape != s.shape:
            raise ParameterError("tabulated spectrum needs matching 1-D xi and S arrays (>= 3 points)")
        if np.any(np.diff(xi) <= 0):
            raise ParameterError("tabulated spectrum grid must be strictly increasing")
        if xi[0] < -0.5 - 1e-12 or xi[-1] > 0.5 + 1e-12:
            raise ParameterError("tabulated spectrum grid must lie within [-1/2, 1/2]")
        if np.any(s < 0):
            raise ParameterError("tabulated spectrum must be nonnegative")
        total = np.trapezoid(s, xi)
        if abs(total - 1.0) > 1e-3:
            raise ParameterError(f"tabulated spectrum must integrate to 1, got {total:.6f}")

    @property
    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.xi, dtype=float), np.asarray(self.s, dtype=float)


BLOCK_IID = BlockIID()


def load_tabulated_spectrum(path) -> TabulatedSpectrum:
    """Read a two-column text table (xi, S) into a TabulatedSpectrum."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ParameterError(f"expected a two-column (xi, S) table in {path}")
    return TabulatedSpectrum(xi=tuple(data[:, 0]), s=tuple(data[:, 1]))


def _gauss_legendre_refined(f, lo: float, hi: float, tol: float = _QUAD_TOL) -> float:
    """Composite Gauss-Legendre with panel doubling until two refinements agree."""
    order = 48
    x, w = leggauss(order)
    prev = None
    for panels in (1, 2, 4, 8, 16, 32, 64):
        edges = np.linspace(lo, hi, panels + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            total += half * float(np.sum(w * f(mid + half * x)))
        if prev is not None and abs(total - prev) <= tol * max(1.0, abs(total)):
            return total
        prev = total
    raise NumericalError(f"quadrature failed to reach tolerance {tol:g} on [{lo}, {hi}]")


def _jakes_log_integral(delta: float, doppler: float) -> float:
    # int_{-F}^{F} log(delta + S(xi)) dxi, split as the closed-form
    # noise-free part plus a smooth correction.  The substitution
    # xi = F sin(theta) maps S to 1/(pi F cos(theta)) and removes the
    # inverse-square-root endpoint singularity:
    #   int log S dxi            = -2F log(2 pi F / e)           (exact)
    #   int log(1 + delta/S) dxi = int F cos(t) log(1 + delta pi F cos t) dt
    f = doppler
    noise_free = -2.0 * f * math.log(2.0 * math.pi * f / math.e)

    def corr(theta):
        c = np.cos(theta)
        return f * c * np.log1p(delta * math.pi * f * c)

    correction = _gauss_legendre_refined(corr, -0.5 * math.pi, 0.5 * math.pi)
    return noise_free + correction


def prediction_error(process: FadingProcess, delta: float) -> float:
    """One-step (one-frame-ahead) noisy prediction MMSE eps1(delta).

    delta is the observation noise variance per training symbol block,
    i.e. 1 / (beta1 * snr) for common training at linear SNR.  Returns a
    value in (0, 1].
    """
    if not delta > 0:
        raise ParameterError(f"prediction_error requires delta > 0, got {delta}")
    if isinstance(process, BlockIID):
        return 1.0
    if isinstance(process, GaussMarkov):
        return gauss_markov_prediction_error(process.r, delta)
    if isinstance(process, Jakes):
        f = process.doppler
        log_int = _jakes_log_integral(delta, f)
        return float(delta ** (1.0 - 2.0 * f) * math.exp(log_int) - delta)
    if isinstance(process, TabulatedSpectrum):
        xi, s = process.grid
        val = np.trapezoid(np.log(delta + s), xi)
        # Grid gaps at the band edges count as zero-spectrum mass.
        val += (1.0 - (xi[-1] - xi[0])) * math.log(delta)
        return float(math.exp(val) - delta)
    raise ParameterError(f"unsupported fading process {process!r}")


def filtering_error(delta: float, eps1: float) -> float:
    """Filtering (zero-delay) MMSE from the one-step prediction error.

    eps0 = delta * eps1 / (delta + eps1); always <= min(delta, eps1).
    """
    if not delta > 0:
        raise ParameterError(f"filtering_error requires delta > 0, got {delta}")
    if not 0.0 < eps1 <= 1.0:
        raise ParameterError(f"filtering_error requires eps1 in (0, 1], got {eps1}")
    return delta * eps1 / (delta + eps1)


def gauss_markov_prediction_error(r: float, delta: float) -> float:
    """Closed-form one-step noisy prediction MMSE of the AR(1) process."""
    if not 0.0 < r < 1.0:
        raise ParameterError(f"correlation must lie in (0, 1), got {r}")
    if delta < 0:
        raise ParameterError(f"delta must be nonnegative, got {delta}")
    ratio = (1.0 + r * r) / (1.0 - r * r)
    root = math.sqrt(1.0 + delta * delta + 2.0 * delta * ratio)
    return (1.0 - r * r) * (1.0 + 0.5 * (root - (1.0 + delta)))


def delay_error(process: FadingProcess, delta: float, delay: int) -> float:
    """eps_d(delta) for delay d in {0, 1}: filtering or one-step prediction."""
    if delay not in (0, 1):
        raise ParameterError(f"feedback delay must be 0 or 1, got {delay}")
    eps1 = prediction_error(process, delta)
    if delay == 1:
        return eps1
    return filtering_error(delta, eps1)


def doppler_from_mobility(v: float, f_c: float, t_f: float) -> float:
    """Normalized per-frame Doppler F = v * f_c / c * T_f (must be < 1/2).

    v in m/s, f_c in Hz, t_f in seconds.
    """
    if not (v >= 0 and f_c > 0 and t_f > 0):
        raise ParameterError("mobility inputs must be positive (v may be 0)")
    f = v * f_c / SPEED_OF_LIGHT * t_f
    if f >= 0.5:
        raise ParameterError(f"normalized Doppler {f:.4f} >= 1/2: model invalid")
    return f


def gauss_markov_from_doppler(doppler: float) -> GaussMarkov:
    """Maximum-entropy AR(1) approximation with lag-1 correlation J0(2 pi F)."""
    return GaussMarkov(r=bessel_j0(2.0 * math.pi * doppler))


def spectrum_normalization(process: FadingProcess) -> float:
    """Integral of the spectrum (should be 1); used by validation tests."""
    if isinstance(process, BlockIID):
        return 1.0
    if isinstance(process, Jakes):
        f = process.doppler
        # xi = F sin(theta) turns the density into the constant 1/pi.
        return _gauss_legendre_refined(lambda t: np.full_like(t, 1.0 / math.pi),
                                       -0.5 * math.pi, 0.5 * math.pi)
    if isinstance(process, GaussMarkov):
        return _gauss_legendre_refined(process.spectrum, -0.5, 0.5)
    if isinstance(process, TabulatedSpectrum):
        xi, s = process.grid
        return float(np.trapezoid(s, xi))
    raise ParameterError(f"unsupported fading process {process!r}")
