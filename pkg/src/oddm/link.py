"""End-to-end link simulation: modulator, channel, noise, detector and bit counting."""

from dataclasses import dataclass

import numpy as np

from .analog import analog_demodulate, analog_modulate
from .channel import add_awgn, apply_channel, noise_density
from .detection import (
    BerResult,
    ber_count,
    ber_from_counts,
    calibrate_effective_channel,
    effective_channel,
    hard_decisions,
    lmmse_detect,
    mp_detect,
)
from .digital import digital_demodulate, digital_modulate
from .otfs import otfs_demodulate, otfs_modulate
from .params import DomainError, qam_demap, qam_map, random_bits
from .pulse import srrc_pulse

SYSTEMS = ("analog", "digital", "otfs")
DETECTORS = ("mp", "lmmse")
CHANNEL_ESTIMATES = ("calibrated", "model")
BITS_PER_SYMBOL = 2


@dataclass(frozen=True)
class Transceiver:
    params: object
    system: str
    pulse: object = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise DomainError(f"unknown system {self.system!r}; expected one of {SYSTEMS}")
        if self.pulse is None and self.system != "otfs":
            object.__setattr__(self, "pulse", srrc_pulse(self.params))

    def modulate(self, grid):
        if self.system == "analog":
            return analog_modulate(grid, self.params, self.pulse)
        if self.system == "digital":
            return digital_modulate(grid, self.params, self.pulse)
        return otfs_modulate(grid, self.params)

    def demodulate(self, rx):
        if self.system == "analog":
            return analog_demodulate(rx, self.params, self.pulse)
        if self.system == "digital":
            return digital_demodulate(rx, self.params, self.pulse)
        return otfs_demodulate(rx, self.params)

    def pipeline(self, ch):
        return lambda grid: self.demodulate(apply_channel(self.modulate(grid), ch))

    def detector_channel(self, ch, method="calibrated"):
        """Effective channel handed to the detector.

        ``"calibrated"`` measures the per-symbol tap gains by probing this
        transceiver's pipeline with unit impulses (MN probes). ``"model"``
        uses the closed-form shift relation, which fits ODDM but ignores the
        block-edge leakage of the rectangular-pulse OTFS receiver.
        """
        if method == "calibrated":
            return calibrate_effective_channel(ch, self.params, self.pipeline(ch))
        if method == "model":
            return effective_channel(ch, self.params)
        raise DomainError(f"unknown channel estimate {method!r}; expected one of {CHANNEL_ESTIMATES}")


def detect(Y, H, noise_var, detector):
    if detector == "mp":
        return mp_detect(Y, H, noise_var)
    if detector == "lmmse":
        return hard_decisions(lmmse_detect(Y, H, noise_var))
    raise DomainError(f"unknown detector {detector!r}; expected one of {DETECTORS}")


def run_frame(link, ch, H, ebn0_db, detector, seed):
    """One frame; ``seed`` is a SeedSequence split into (bits, noise) streams."""
    s_bits, s_noise = seed.spawn(2)
    params = link.params
    bits = random_bits(np.random.default_rng(s_bits), params)
    tx = link.modulate(qam_map(bits, params))
    rx = add_awgn(apply_channel(tx, ch), ebn0_db, BITS_PER_SYMBOL, params, np.random.default_rng(s_noise))
    Y = link.demodulate(rx)
    noise_var = 0.0 if np.isinf(ebn0_db) else noise_density(ebn0_db, BITS_PER_SYMBOL)
    return ber_count(bits, qam_demap(detect(Y, H, noise_var, detector)))


def ber_point(link, ch, ebn0_db, detector, frames, seed, H=None, pool=None):
    """BER over ``frames`` frames; frame i always uses the i-th child of ``seed``.

    ``pool`` (a concurrent.futures executor) spreads frames over workers
    without changing the result.
    """
    if frames < 1:
        raise DomainError("frames must be at least 1")
    H = link.detector_channel(ch) if H is None else H
    seeds = seed.spawn(frames)
    if pool is None:
        results = [run_frame(link, ch, H, ebn0_db, detector, s) for s in seeds]
    else:
        results = list(pool.map(run_frame, *zip(*[(link, ch, H, ebn0_db, detector, s) for s in seeds])))
    errors = sum(r.errors for r in results)
    total = sum(r.total for r in results)
    return ber_from_counts(errors, total)


def frames_for_bits(params, bits):
    per_frame = BITS_PER_SYMBOL * params.M * params.N
    return -(-int(bits) // per_frame)


__all__ = [
    "BITS_PER_SYMBOL",
    "CHANNEL_ESTIMATES",
    "BerResult",
    "DETECTORS",
    "SYSTEMS",
    "Transceiver",
    "ber_point",
    "detect",
    "frames_for_bits",
    "run_frame",
]
