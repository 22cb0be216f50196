"""Doubly selective multipath channel, AWGN, and the EVA tap generator."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .export import write_csv
from .params import DomainError, SampledWaveform

# Extended Vehicular A (3GPP TS 36.104 Annex B.2)
EVA_DELAYS_NS = (0, 30, 150, 310, 370, 710, 1090, 1730, 2510)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)

FRACTIONAL_TAPS = 64
KAISER_BETA = 8.0
_GRID_TOL = 1e-6


@dataclass(frozen=True)
class Tap:
    gain: complex
    delay_s: float
    doppler_hz: float


@dataclass(frozen=True)
class DdChannel:
    taps: tuple

    def __post_init__(self):
        taps = tuple(t if isinstance(t, Tap) else Tap(*t) for t in self.taps)
        if not taps:
            raise DomainError("a channel needs at least one tap")
        for t in taps:
            if t.delay_s < 0:
                raise DomainError(f"negative delay {t.delay_s}")
        object.__setattr__(self, "taps", taps)

    @classmethod
    def on_grid(cls, params, taps):
        """Build from ``(gain, l, k)`` triples in delay/Doppler bin units."""
        return cls(tuple(Tap(complex(g), l * params.delay_res, k * params.doppler_res) for g, l, k in taps))

    @property
    def max_delay(self):
        return max(t.delay_s for t in self.taps)

    def is_on_grid(self, params):
        try:
            self.grid_indices(params)
        except DomainError:
            return False
        return True

    def grid_indices(self, params):
        """Integer ``(l, k)`` per tap; raises if any tap is off the delay-Doppler grid."""
        out = []
        for t in self.taps:
            l, k = t.delay_s / params.delay_res, t.doppler_hz / params.doppler_res
            if abs(l - round(l)) > _GRID_TOL or abs(k - round(k)) > _GRID_TOL:
                raise DomainError(f"tap (delay {t.delay_s} s, Doppler {t.doppler_hz} Hz) is off the grid")
            out.append((round(l), round(k)))
        return out

    def to_csv(self, path):
        return write_csv(
            path,
            ["tap", "gain_re", "gain_im", "delay_s", "doppler_hz"],
            [
                np.arange(len(self.taps)),
                [t.gain.real for t in self.taps],
                [t.gain.imag for t in self.taps],
                [t.delay_s for t in self.taps],
                [t.doppler_hz for t in self.taps],
            ],
        )


def fractional_delay_filter(frac, ntaps=FRACTIONAL_TAPS, beta=KAISER_BETA):
    """Kaiser-windowed sinc delaying by ``frac`` samples; output index 0 is lag ``-(ntaps//2 - 1)``."""
    k = np.arange(ntaps) - (ntaps // 2 - 1)
    return np.sinc(k - frac) * np.kaiser(ntaps, beta)


def apply_channel(tx, ch):
    """r(t) = sum_p h_p x(t - tau_p) exp(j 2 pi nu_p (t - tau_p)).

    The output keeps ``tx.t0`` and is long enough to hold the latest echo.
    """
    fs = tx.fs
    shifts = [t.delay_s * fs for t in ch.taps]
    pad = FRACTIONAL_TAPS if any(abs(s - round(s)) > _GRID_TOL for s in shifts) else 0
    length = len(tx) + int(math.ceil(max(shifts) - _GRID_TOL)) + pad
    out = np.zeros(length, complex)
    t = tx.t0 + np.arange(length) / fs
    for tap, s in zip(ch.taps, shifts):
        whole = int(math.floor(s + _GRID_TOL))
        frac = s - whole
        if abs(frac) <= _GRID_TOL:
            delayed = np.zeros(length, complex)
            delayed[whole : whole + len(tx)] = tx.samples
        else:
            h = fractional_delay_filter(frac)
            full = np.convolve(tx.samples, h)
            lead = FRACTIONAL_TAPS // 2 - 1
            buf = np.zeros(max(whole + full.size, lead + length), complex)
            buf[whole : whole + full.size] = full
            delayed = buf[lead : lead + length]
        phase = np.exp(2j * np.pi * tap.doppler_hz * (t - tap.delay_s))
        out += tap.gain * delayed * phase
    return SampledWaveform(out, fs, tx.t0)


def noise_density(ebn0_db, bits_per_symbol, Es=1.0):
    """N0 such that Eb/N0 = ``ebn0_db`` for symbols of energy ``Es``."""
    return Es / (bits_per_symbol * 10 ** (ebn0_db / 10))


def add_awgn(wf, ebn0_db, bits_per_symbol, params, seed, Es=1.0):
    """Add circular white Gaussian noise of two-sided density N0 (per-sample variance N0*fs).

    A unit-energy matched filter then sees noise variance N0 per DD symbol.
    ``ebn0_db = inf`` returns the input unchanged. ``seed`` may be an int, a
    SeedSequence or a Generator.
    """
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return wf
    if not math.isfinite(ebn0_db):
        raise DomainError(f"Eb/N0 must be finite or +inf, got {ebn0_db}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n0 = noise_density(ebn0_db, bits_per_symbol, Es)
    var = n0 * wf.fs
    noise = rng.standard_normal((2, len(wf))) * math.sqrt(var / 2)
    meta = dict(wf.meta, noise_density=n0, sample_variance=var, ebn0_db=ebn0_db, bits_per_symbol=bits_per_symbol)
    return SampledWaveform(wf.samples + noise[0] + 1j * noise[1], wf.fs, wf.t0, meta)


def max_doppler(fc_hz, speed_kmh):
    return fc_hz * (speed_kmh / 3.6) / SPEED_OF_LIGHT


def eva_profile(fc_hz, speed_kmh, params, seed, quantize_to_grid=True):
    """Random EVA realization: Rayleigh gains (total mean power 1), Doppler nu_max cos(theta).

    With ``quantize_to_grid`` delays snap to multiples of T/M and Dopplers to
    multiples of 1/(NT).
    """
    if fc_hz <= 0 or speed_kmh <= 0:
        raise DomainError("carrier frequency and speed must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = 10 ** (np.array(EVA_POWERS_DB) / 10)
    p /= p.sum()
    g = np.sqrt(p / 2) * (rng.standard_normal(p.size) + 1j * rng.standard_normal(p.size))
    nu = max_doppler(fc_hz, speed_kmh) * np.cos(rng.uniform(0, 2 * np.pi, p.size))
    tau = np.array(EVA_DELAYS_NS) * 1e-9
    if quantize_to_grid:
        tau = np.round(tau / params.delay_res) * params.delay_res
        nu = np.round(nu / params.doppler_res) * params.doppler_res
    return DdChannel(tuple(Tap(complex(a), float(b), float(c)) for a, b, c in zip(g, tau, nu)))
