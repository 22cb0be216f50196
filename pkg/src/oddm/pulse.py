"""Square-root raised-cosine sub-pulse and the delay-Doppler pulse trains built from it."""

from dataclasses import dataclass

import numpy as np

from .export import write_csv
from .params import DomainError, SampledWaveform

_GUARD = 1e-8


def srrc(t, symbol_time, beta):
    """Untruncated square-root raised cosine with zero-ISI spacing ``symbol_time``.

    Unit energy in continuous time. The removable singularities at ``t = 0`` and
    ``|t| = symbol_time / (4 beta)`` use their analytic limits.
    """
    x = np.asarray(t, dtype=float) / symbol_time
    out = np.empty_like(x)
    scale = 1.0 / np.sqrt(symbol_time)

    at_zero = np.abs(x) < _GUARD
    if beta > 0:
        at_edge = np.abs(np.abs(x) - 1.0 / (4 * beta)) < _GUARD
    else:
        at_edge = np.zeros_like(at_zero)
    rest = ~(at_zero | at_edge)

    out[at_zero] = 1.0 - beta + 4 * beta / np.pi
    if np.any(at_edge):
        a = np.pi / (4 * beta)
        out[at_edge] = beta / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(a) + (1 - 2 / np.pi) * np.cos(a))
    xr = x[rest]
    num = np.sin(np.pi * xr * (1 - beta)) + 4 * beta * xr * np.cos(np.pi * xr * (1 + beta))
    den = np.pi * xr * (1 - (4 * beta * xr) ** 2)
    out[rest] = num / den
    return out * scale


@dataclass(frozen=True)
class ProtoPulse:
    """Sampled sub-pulse; ``taps[center]`` is t = 0 and samples are ``dt`` apart."""

    taps: np.ndarray
    center: int
    dt: float

    @property
    def energy(self):
        return float(np.sum(np.abs(self.taps) ** 2) * self.dt)

    @property
    def duration(self):
        return 2 * self.center * self.dt

    def times(self):
        return (np.arange(self.taps.size) - self.center) * self.dt

    def autocorrelation(self):
        """Sampled autocorrelation ``R[k] = dt * sum_j a[j] a*[j-k]`` for lags ``-(L-1)..L-1``."""
        return np.correlate(self.taps, self.taps, mode="full") * self.dt

    def to_csv(self, path):
        return write_csv(path, ["index", "time_s", "value"], [np.arange(self.taps.size), self.times(), self.taps])


def srrc_pulse(params, normalize=True):
    """SRRC sub-pulse truncated to [-Ta/2, Ta/2] and sampled at ``params.fs``."""
    k = np.arange(-params.Q * params.Ns, params.Q * params.Ns + 1)
    taps = srrc(k * params.dt, params.delay_res, params.beta)
    if normalize:
        taps = taps / np.sqrt(np.sum(taps**2) * params.dt)
    taps.setflags(write=False)
    return ProtoPulse(taps=taps, center=params.Q * params.Ns, dt=params.dt)


@dataclass(frozen=True)
class Ddop:
    """A pulse train on the simulation lattice."""

    wf: SampledWaveform
    kind: str
    n_subpulses: int


def _train(params, pulse, offsets, weight, t0_offset):
    """Sum of sub-pulses placed ``offsets`` symbol periods after ``t0_offset``."""
    sps = params.samples_per_symbol
    L = pulse.taps.size
    span = (max(offsets) - min(offsets)) * sps + L
    out = np.zeros(span, complex)
    base = min(offsets)
    for o in offsets:
        s = (o - base) * sps
        out[s : s + L] += weight * pulse.taps
    t0 = base * params.T - pulse.center * pulse.dt + t0_offset
    return SampledWaveform(out, params.fs, t0)


def build_ddop(params, pulse):
    """N sub-pulses at 0, T, ..., (N-1)T scaled by 1/sqrt(N)."""
    wf = _train(params, pulse, list(range(params.N)), 1 / np.sqrt(params.N), 0.0)
    return Ddop(wf, "plain", params.N)


def build_ddop_cp(params, pulse, m):
    """Pulse train for delay index ``m``: adds the sub-pulse at -T when ``m >= M - Lcp``."""
    if not 0 <= m < params.M:
        raise DomainError(f"delay index {m} outside [0, {params.M})")
    if m <= params.M - params.Lcp - 1:
        d = build_ddop(params, pulse)
        return Ddop(d.wf, "cp_appended", params.N)
    wf = _train(params, pulse, list(range(-1, params.N)), 1 / np.sqrt(params.N), 0.0)
    return Ddop(wf, "cp_appended", params.N + 1)


CE_SCALES = ("raw", "sqrt_n", "unit_energy")


def build_ddop_ce(params, pulse, scale="raw"):
    """Generalized train of N + 2D sub-pulses at 0, T, ..., (N-1+2D)T.

    ``scale`` is ``"raw"`` (no factor), ``"sqrt_n"`` (1/sqrt(N), as for the plain
    train) or ``"unit_energy"`` (1/sqrt(N+2D)).
    """
    count = params.N + 2 * params.D
    weights = {"raw": 1.0, "sqrt_n": 1 / np.sqrt(params.N), "unit_energy": 1 / np.sqrt(count)}
    if scale not in weights:
        raise DomainError(f"scale must be one of {CE_SCALES}, got {scale!r}")
    wf = _train(params, pulse, list(range(count)), weights[scale], 0.0)
    return Ddop(wf, "generalized", count)
