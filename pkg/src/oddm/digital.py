"""Approximate-digital ODDM: IDFT, serialization, CP and sample-wise pulse shaping."""

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .analog import frame_length, frame_origin
from .params import DdGrid, DomainError, SampledWaveform, mod_index


@dataclass(frozen=True)
class DiscreteTimeSeq:
    """Symbol sequence whose first element has time index ``start``."""

    values: np.ndarray
    start: int = 0

    def __len__(self):
        return self.values.size


def dd_to_delay_time(grid):
    """Row-wise unitary N-point IDFT: X_dt[m, k] = N^-1/2 sum_n X[m, n] exp(j 2 pi n k / N)."""
    X = grid.values if isinstance(grid, DdGrid) else np.asarray(grid, complex)
    return fft.ifft(X, axis=1, norm="ortho")


def delay_time_to_dd(X_dt):
    """Inverse of :func:`dd_to_delay_time`."""
    return fft.fft(np.asarray(X_dt, complex), axis=1, norm="ortho")


def serialize(X_dt):
    """Column-major read-out: ``seq[k*M + m] = X_dt[m, k]``."""
    return DiscreteTimeSeq(np.asarray(X_dt).T.ravel().copy(), 0)


def deserialize(seq, M, N):
    v = seq.values if isinstance(seq, DiscreteTimeSeq) else np.asarray(seq)
    if v.size != M * N:
        raise DomainError(f"sequence length {v.size} != M*N = {M * N}")
    return v.reshape(N, M).T.copy()


def add_cp(seq, Lcp):
    """Prefix the last ``Lcp`` symbols; the result starts at index ``-Lcp``."""
    n = len(seq)
    if not 0 <= Lcp < n:
        raise DomainError(f"Lcp must lie in [0, {n}), got {Lcp}")
    k = np.arange(-Lcp, n)
    return DiscreteTimeSeq(seq.values[mod_index(k, n)], seq.start - Lcp)


def remove_cp(seq, Lcp):
    if not 0 <= Lcp < len(seq):
        raise DomainError(f"Lcp must lie in [0, {len(seq)}), got {Lcp}")
    return DiscreteTimeSeq(seq.values[Lcp:].copy(), seq.start + Lcp)


def transmit_sequence(grid, params):
    X = grid.check(params) if isinstance(grid, DdGrid) else np.asarray(grid, complex)
    if X.shape != (params.M, params.N):
        raise DomainError(f"grid shape {X.shape} does not match ({params.M}, {params.N})")
    return add_cp(serialize(dd_to_delay_time(X)), params.Lcp)


def shape_sequence(seq, params, pulse):
    """Zero-stuff by Ns and filter with the sub-pulse taps."""
    up = np.zeros((len(seq) - 1) * params.Ns + 1, complex)
    up[:: params.Ns] = seq.values
    return np.convolve(up, pulse.taps)


def digital_modulate(grid, params, pulse):
    seq = transmit_sequence(grid, params)
    out = shape_sequence(seq, params, pulse)
    assert out.size == frame_length(params)
    return SampledWaveform(out, params.fs, frame_origin(params))


def _check_rate(rx, params):
    if not np.isclose(rx.fs, params.fs, rtol=1e-12):
        raise DomainError(f"waveform rate {rx.fs} differs from params.fs = {params.fs}")


def matched_filter(rx, params, pulse, count, first_symbol):
    """Samples of the pulse-matched filter output at t = k T/M for ``count`` consecutive k.

    ``rx`` is taken as zero outside its samples.
    """
    _check_rate(rx, params)
    k0 = round(first_symbol * params.Ns) - pulse.center  # global lattice index of first needed sample
    need = (count - 1) * params.Ns + pulse.taps.size
    seg = rx.on_lattice(k0, need)
    y = np.correlate(seg, pulse.taps.astype(complex), mode="valid")
    return y[:: params.Ns] * pulse.dt


def digital_demodulate(rx, params, pulse):
    y = matched_filter(rx, params, pulse, params.M * params.N + params.Lcp, -params.Lcp)
    body = remove_cp(DiscreteTimeSeq(y, -params.Lcp), params.Lcp)
    return DdGrid(delay_time_to_dd(deserialize(body, params.M, params.N)))


def digital_basis(m, n, params, pulse):
    """N^-1/2 sum_k exp(j 2 pi n k / N) a(t - kT - m T/M) on the lattice."""
    if not (0 <= m < params.M and 0 <= n < params.N):
        raise DomainError(f"(m, n) = ({m}, {n}) outside the grid")
    sps = params.samples_per_symbol
    L = pulse.taps.size
    out = np.zeros((params.N - 1) * sps + L, complex)
    w = np.exp(2j * np.pi * n * np.arange(params.N) / params.N) / np.sqrt(params.N)
    for k in range(params.N):
        out[k * sps : k * sps + L] += w[k] * pulse.taps
    t0 = m * params.delay_res - pulse.center * pulse.dt
    return SampledWaveform(out, params.fs, t0)
