"""Orthogonal delay-Doppler division multiplexing (ODDM) link-level simulation."""

__version__ = "0.1.0"

from ._accel import backend_name
from .analog import analog_basis, analog_demodulate, analog_modulate
from .channel import DdChannel, Tap, add_awgn, apply_channel, eva_profile
from .detection import (
    BerResult,
    EffectiveChannel,
    ber_count,
    calibrate_effective_channel,
    effective_channel,
    lmmse_detect,
    mp_detect,
)
from .digital import digital_basis, digital_demodulate, digital_modulate
from .orthogonality import ambiguity, auto_ambiguity, cross_ambiguity_ce, gram, lambda_digital
from .otfs import isfft, otfs_demodulate, otfs_modulate, sfft
from .params import DdGrid, DomainError, OddmParams, SampledWaveform, nmse_db, qam_demap, qam_map, random_bits
from .pulse import build_ddop, build_ddop_ce, srrc_pulse
from .spectrum import PsdCurve, oobe_metrics, psd_analytic_analog, psd_analytic_digital, psd_empirical

__all__ = [
    "__version__",
    "BerResult",
    "DdChannel",
    "DdGrid",
    "DomainError",
    "EffectiveChannel",
    "OddmParams",
    "PsdCurve",
    "SampledWaveform",
    "Tap",
    "add_awgn",
    "ambiguity",
    "analog_basis",
    "analog_demodulate",
    "analog_modulate",
    "apply_channel",
    "auto_ambiguity",
    "backend_name",
    "ber_count",
    "build_ddop",
    "build_ddop_ce",
    "calibrate_effective_channel",
    "cross_ambiguity_ce",
    "digital_basis",
    "digital_demodulate",
    "digital_modulate",
    "effective_channel",
    "eva_profile",
    "gram",
    "isfft",
    "lambda_digital",
    "lmmse_detect",
    "mp_detect",
    "nmse_db",
    "oobe_metrics",
    "otfs_demodulate",
    "otfs_modulate",
    "psd_analytic_analog",
    "psd_analytic_digital",
    "psd_empirical",
    "qam_demap",
    "qam_map",
    "random_bits",
    "sfft",
    "srrc_pulse",
]
