"""System parameters and feedback-scheme tags shared across the package.

Conventions: the downlink has M base-station antennas serving K = M
single-antenna terminals with uniform power P/M per user; snr means the
linear ratio P/N0.  Training overheads are measured per antenna:
beta1 (common pilots), beta2 (dedicated per-beam pilots), beta_fb
(feedback symbols per channel coefficient).  beta1 = beta2 = inf models
perfect receiver-side channel knowledge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .exceptions import ParameterError

__all__ = [
    "SystemParams",
    "Scheme",
    "Perfect",
    "AnalogAWGN",
    "TDD",
    "DigitalErrorFree",
    "DigitalQAM",
    "MacAnalog",
    "MacDigital",
    "db_to_linear",
    "linear_to_db",
]


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if not x > 0:
        raise ParameterError(f"cannot express nonpositive value {x} in dB")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """All scalar knobs of the downlink model.

    group_size (L) and beta_up only matter for the multi-access feedback
    schemes; delay only with a time-correlated fading process.
    """

    m: int
    snr_db: float
    beta1: float = 1.0
    beta2: float = 1.0
    beta_fb: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0
    group_size: int | None = None
    beta_up: float | None = None
    delay: int = 0

    def __post_init__(self):
        if self.m < 1 or int(self.m) != self.m:
            raise ParameterError(f"antenna count must be a positive integer, got {self.m}")
        if not self.beta1 > 0:
            raise ParameterError(f"beta1 must be positive, got {self.beta1}")
        if not self.beta2 > 0:
            raise ParameterError(f"beta2 must be positive, got {self.beta2}")
        if not self.beta_fb > 0:
            raise ParameterError(f"beta_fb must be positive, got {self.beta_fb}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if self.group_size is not None:
            if not 1 <= self.group_size <= self.m:
                raise ParameterError(
                    f"group size must satisfy 1 <= L <= M, got L={self.group_size}, M={self.m}")
            if self.m % self.group_size != 0:
                raise ParameterError(
                    f"M={self.m} must split into equal groups of L={self.group_size}")
        if self.beta_up is not None and not self.beta_up >= 1:
            raise ParameterError(f"beta_up must be >= 1, got {self.beta_up}")
        if self.delay not in (0, 1):
            raise ParameterError(f"delay must be 0 or 1, got {self.delay}")

    @property
    def snr(self) -> float:
        """Linear downlink SNR."""
        return db_to_linear(self.snr_db)

    def at_snr_db(self, snr_db: float) -> "SystemParams":
        return replace(self, snr_db=snr_db)

    @property
    def perfect_csir(self) -> bool:
        return math.isinf(self.beta1) and math.isinf(self.beta2)


@dataclass(frozen=True)
class Scheme:
    """Base tag for channel-state feedback mechanisms."""

    tag: str = "base"


@dataclass(frozen=True)
class Perfect(Scheme):
    """Transmitter knows the terminals' channel estimates exactly."""

    tag: str = "perfect"


@dataclass(frozen=True)
class AnalogAWGN(Scheme):
    """Unquantized feedback of the training observation over an AWGN uplink."""

    tag: str = "analog"


@dataclass(frozen=True)
class TDD(Scheme):
    """Reciprocal system: the base station estimates channels from uplink pilots.

    beta_tdd uplink pilots per terminal; equivalent to analog feedback with
    perfect feedback link and common training beta1 = beta_tdd.
    """

    tag: str = "tdd"
    beta_tdd: float = 1.0

    def __post_init__(self):
        if not self.beta_tdd > 0:
            raise ParameterError(f"beta_tdd must be positive, got {self.beta_tdd}")


@dataclass(frozen=True)
class DigitalErrorFree(Scheme):
    """Random-vector-quantized direction feedback over an error-free link.

    bits = None converts the symbol budget to bits at channel capacity:
    B = beta_fb * (M - 1) * log2(1 + snr).
    """

    tag: str = "digital"
    bits: float | None = None
    strategy: str = "auto"  # 'auto' | 'explicit' | 'distributional'


@dataclass(frozen=True)
class DigitalQAM(Scheme):
    """Quantized feedback sent as uncoded square-QAM symbols, with errors.

    B = alpha * (M - 1) * log2(snr) bits in beta_fb * (M - 1) symbols.
    ser_mode selects the exact symbol error rate or its exponential bound.
    """

    tag: str = "qam"
    ser_mode: str = "exact"  # 'exact' | 'bound'


@dataclass(frozen=True)
class MacAnalog(Scheme):
    """Analog feedback with groups of L terminals sharing the fading uplink."""

    tag: str = "mac-analog"


@dataclass(frozen=True)
class MacDigital(Scheme):
    """Digital feedback with L terminals jointly decoded on the fading uplink."""

    tag: str = "mac-digital"
