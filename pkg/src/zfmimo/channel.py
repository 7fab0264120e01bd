"""Channel sampling, zero-forcing beamformers and the two training phases.

Complex Gaussian convention: CN(0, 1) entries have variance 1/2 per real
and imaginary part, so E|h|^2 = 1.  Every sampling routine takes an
explicit numpy Generator; nothing touches global random state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, RankDeficiencyError

__all__ = [
    "TrainingOutcome",
    "sample_channel",
    "zf_beamformers",
    "common_training",
    "dedicated_training",
    "coupling_coefficients",
]

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class TrainingOutcome:
    """MMSE estimate from one training phase plus its error variance."""

    estimate: np.ndarray | complex
    error_variance: float
    raw_observation: np.ndarray | complex


def complex_normal(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """i.i.d. CN(0, 1) array of the given shape."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def sample_channel(m: int, rng: np.random.Generator) -> np.ndarray:
    """M x M channel matrix with columns h_k, entries i.i.d. CN(0, 1)."""
    if m < 1 or int(m) != m:
        raise ParameterError(f"antenna count must be a positive integer, got {m}")
    return complex_normal(rng, int(m), int(m))


def _fix_column_phases(v: np.ndarray) -> np.ndarray:
    # Rotate each column so its first component of non-negligible magnitude
    # is positive real; makes the (phase-ambiguous) beamformers reproducible.
    m = v.shape[0]
    out = v.copy()
    for k in range(v.shape[1]):
        col = out[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-8))
        phase = col[idx] / abs(col[idx])
        out[:, k] = col / phase
    assert out.shape[0] == m
    return out


def zf_beamformers(h_hat: np.ndarray) -> np.ndarray:
    """Unit-norm beamformers, column k orthogonal to every other column of h_hat.

    Computed from the SVD nullspace of the matrix with column k deleted,
    with a deterministic phase convention (first nonzero component
    positive real).  Raises RankDeficiencyError when a deleted submatrix
    is numerically rank deficient.
    """
    h_hat = np.asarray(h_hat)
    if h_hat.ndim != 2 or h_hat.shape[0] != h_hat.shape[1]:
        raise ParameterError(f"expected a square channel matrix, got shape {h_hat.shape}")
    m = h_hat.shape[0]
    if m == 1:
        return np.ones((1, 1), dtype=complex)
    v = np.empty((m, m), dtype=complex)
    for k in range(m):
        others = np.delete(h_hat, k, axis=1)
        # Nullspace of others^H: last left-singular vector of the deleted matrix.
        u, s, _ = np.linalg.svd(others, full_matrices=True)
        if s[-1] < _RANK_TOL * s[0]:
            raise RankDeficiencyError(
                f"deleted channel submatrix for user {k} is rank deficient "
                f"(sigma_min/sigma_max = {s[-1] / s[0]:.2e})")
        v[:, k] = u[:, -1]
    v /= np.linalg.norm(v, axis=0, keepdims=True)
    return _fix_column_phases(v)


def zf_directions_batch(h_hat: np.ndarray) -> np.ndarray:
    """Batched zero-forcing directions via the normalized inverse Gram rows.

    For a stack of square matrices with columns h_k, column k of
    inv(H^H) is orthogonal to every h_j, j != k; normalizing gives the
    same directions as zf_beamformers up to a per-column phase (which no
    squared coupling magnitude can see).  Trials whose matrix is too
    ill-conditioned to invert come back non-finite and are left for the
    caller to resample.
    """
    with np.errstate(all="ignore"):
        w = np.linalg.inv(np.conj(np.swapaxes(h_hat, -1, -2)))
        norms = np.linalg.norm(w, axis=-2, keepdims=True)
        return w / norms


def common_training(h: np.ndarray, beta1: float, snr: float,
                    rng: np.random.Generator) -> TrainingOutcome:
    """Shared-pilot phase: observe s = sqrt(beta1 P) h + z, return the MMSE estimate.

    Error variance sigma^2 = 1 / (1 + beta1 * snr); the channel splits as
    h = estimate + error with independent Gaussian parts.  Non-integer
    beta1 is accepted (unitary pilot spreading), entering only through
    the effective SNR beta1 * snr.
    """
    if not beta1 >= 1:
        raise ParameterError(f"common training requires beta1 >= 1, got {beta1}")
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    h = np.asarray(h)
    if np.isinf(beta1):
        return TrainingOutcome(estimate=h.copy(), error_variance=0.0, raw_observation=h.copy())
    amp = np.sqrt(beta1 * snr)  # noise power normalized to 1
    s = amp * h + complex_normal(rng, *h.shape)
    estimate = amp / (1.0 + beta1 * snr) * s
    return TrainingOutcome(estimate=estimate,
                           error_variance=1.0 / (1.0 + beta1 * snr),
                           raw_observation=s)


def dedicated_training(a_kk: complex, beta2: float, snr: float,
                       rng: np.random.Generator) -> TrainingOutcome:
    """Per-beam pilot phase: observe r = sqrt(beta2 P) a + z, estimate the gain.

    Error variance sigma^2 = 1 / (1 + beta2 * snr); a = estimate + error
    with independent parts of variances 1 - sigma^2 and sigma^2.
    """
    if not beta2 > 0:
        raise ParameterError(f"dedicated training requires beta2 > 0, got {beta2}")
    if not snr > 0:
        raise ParameterError(f"snr must be positive, got {snr}")
    if np.isinf(beta2):
        return TrainingOutcome(estimate=complex(a_kk), error_variance=0.0,
                               raw_observation=complex(a_kk))
    amp = np.sqrt(beta2 * snr)
    r = amp * a_kk + complex(complex_normal(rng, 1)[0])
    estimate = amp / (1.0 + beta2 * snr) * r
    return TrainingOutcome(estimate=estimate,
                           error_variance=1.0 / (1.0 + beta2 * snr),
                           raw_observation=r)


def coupling_coefficients(h: np.ndarray, v_hat: np.ndarray) -> np.ndarray:
    """Coupling matrix a[k, j] = h_k^H v_j between channels and beamformers."""
    h = np.asarray(h)
    v_hat = np.asarray(v_hat)
    if h.shape != v_hat.shape or h.ndim != 2:
        raise ParameterError(
            f"channel and beamformer matrices must be conformable, got {h.shape} vs {v_hat.shape}")
    return np.conj(h.T) @ v_hat
