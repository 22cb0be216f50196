"""Direct (mixer-bank) ODDM modulator and demodulator, simulated at the oversampled rate."""

import numpy as np

from .params import DdGrid, DomainError, SampledWaveform, psi_indices
from .pulse import build_ddop, build_ddop_ce


def frame_origin(params):
    """Time of sample 0 of a transmitted frame: -Tcp - Ta/2."""
    return -params.Lcp * params.delay_res - params.Q * params.Ns * params.dt


def frame_length(params):
    return (params.M * params.N + params.Lcp - 1) * params.Ns + params.taps_len


def _tones(params, subpulses):
    """E[n, s, j] = exp(j 2 pi psi(n) F t) at t = s T + (j - center) dt.

    The phase is reduced with integer arithmetic so that it is exact for every
    sub-pulse index.
    """
    period = params.N * params.M * params.Ns  # samples per 1/F
    L = params.taps_len
    c = params.Q * params.Ns
    k = np.asarray(subpulses)[:, None] * params.samples_per_symbol + (np.arange(L) - c)[None, :]
    psi = psi_indices(params.N)
    phase = np.mod(psi[:, None, None] * k[None, :, :], period)
    return np.exp(2j * np.pi * phase / period)


def _segment_starts(params, subpulses):
    """Frame sample index of the first tap of sub-pulse ``s`` for symbol ``m``."""
    m = np.arange(params.M)[:, None]
    s = np.asarray(subpulses)[None, :]
    return (s * params.M + m + params.Lcp) * params.Ns


def analog_modulate(grid, params, pulse):
    """Frame whose m-th branch is the CP-appended pulse train times the N-tone sum of row m."""
    X = grid.check(params) if isinstance(grid, DdGrid) else np.asarray(grid, complex)
    if X.shape != (params.M, params.N):
        raise DomainError(f"grid shape {X.shape} does not match ({params.M}, {params.N})")
    subs = np.arange(-1, params.N)
    E = _tones(params, subs)
    L = params.taps_len
    seg = (X @ E.reshape(params.N, -1)).reshape(params.M, subs.size, L)
    seg *= pulse.taps / np.sqrt(params.N)
    seg[: params.M - params.Lcp, 0, :] = 0.0  # the -T sub-pulse only exists inside the CP
    starts = _segment_starts(params, subs)
    idx = starts[:, :, None] + np.arange(L)
    keep = idx >= 0
    out = np.zeros(frame_length(params), complex)
    np.add.at(out, idx[keep], seg[keep])
    return SampledWaveform(out, params.fs, frame_origin(params))


def analog_demodulate(rx, params, pulse):
    """Correlate ``rx`` (zero outside its samples) against every delayed, Doppler-modulated pulse train.

    The CP region is ignored.
    """
    subs = np.arange(params.N)
    starts = _segment_starts(params, subs)
    L = params.taps_len
    if not np.isclose(rx.fs, params.fs, rtol=1e-12):
        raise DomainError(f"waveform rate {rx.fs} differs from params.fs = {params.fs}")
    origin = round(frame_origin(params) * params.fs)
    lo, hi = int(starts.min()), int(starts.max()) + L
    r = rx.on_lattice(origin + lo, hi - lo)
    idx = starts - lo
    seg = r[idx[:, :, None] + np.arange(L)] * pulse.taps  # (M, N, L)
    E = _tones(params, subs)
    Y = seg.reshape(params.M, -1) @ E.reshape(params.N, -1).conj().T
    return DdGrid(Y * pulse.dt / np.sqrt(params.N))


def analog_basis(m, n, params, pulse, generalized=False, ce_scale="raw"):
    """exp(j 2 pi psi(n) F (t - m T/M)) times the pulse train delayed by m T/M."""
    if not (0 <= m < params.M and 0 <= n < params.N):
        raise DomainError(f"(m, n) = ({m}, {n}) outside the grid")
    u = build_ddop_ce(params, pulse, ce_scale).wf if generalized else build_ddop(params, pulse).wf
    period = params.N * params.M * params.Ns
    k = u.start_index + np.arange(len(u))  # sample index of t - m T/M
    phase = np.mod(int(psi_indices(params.N)[n]) * k, period)
    samples = u.samples * np.exp(2j * np.pi * phase / period)
    return SampledWaveform(samples, params.fs, u.t0 + m * params.delay_res)
