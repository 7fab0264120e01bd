"""Achievable-rate laboratory for zero-forcing multiuser MIMO downlink
with explicit training and channel-state feedback.

Closed-form rate-gap bounds (bounds), the feedback mechanisms behind
them (feedback), fading-process prediction errors (timecorr), a
reproducible Monte Carlo engine for genie-aided rates (montecarlo), and
a sweep runner that reproduces the reference throughput figures as CSV
data (experiments, cli).
"""

from .exceptions import (CapacityError, NumericalError, ParameterError,
                         RankDeficiencyError, ZfMimoError)
from .params import (AnalogAWGN, DigitalErrorFree, DigitalQAM, MacAnalog,
                     MacDigital, Perfect, Scheme, SystemParams, TDD,
                     db_to_linear, linear_to_db)
from .timecorr import (BLOCK_IID, BlockIID, FadingProcess, GaussMarkov, Jakes,
                       TabulatedSpectrum, doppler_from_mobility,
                       filtering_error, gauss_markov_prediction_error,
                       prediction_error)
from .bounds import (GapBound, WishartMmse, analog_csir_gap_bound,
                     digital_csir_gap_bound, detected_rate_lower_bound,
                     gap_analog_awgn, gap_digital, gap_digital_errors,
                     gap_mac_analog, gap_with_prediction,
                     genie_gap_bound_mac_full, optimal_group_size,
                     regular_ceiling, wishart_mmse, zf_ideal_rate)
from .feedback import (analog_error_variance, mac_digital_error_prob,
                       qam_error_prob, rvq_expected_distortion, rvq_quantize)
from .montecarlo import (EstimateWithCI, SimConfig, estimate_cross_coupling,
                         lemma2_property_check, simulate_genie_rate)
from .experiments import (Curve, ResultRow, SweepSpec, envelope_over_alpha,
                          figure_preset, read_result_rows, run_sweep,
                          write_result_rows, write_spec_sidecar)

__version__ = "0.1.0"
