"""OTFS with a rectangular transmit pulse, used as a spectral and BER baseline."""

import numpy as np
from scipy import fft

from .params import DdGrid, DomainError, SampledWaveform, psi_indices


def isfft(grid):
    """DD grid (M, N) -> time-frequency grid (N, M), unitary."""
    X = grid.values if isinstance(grid, DdGrid) else np.asarray(grid, complex)
    return fft.fft(fft.ifft(X, axis=1, norm="ortho"), axis=0, norm="ortho").T


def sfft(X_tf):
    """Inverse of :func:`isfft`: time-frequency (N, M) -> DD (M, N)."""
    X = np.asarray(X_tf, complex).T
    return fft.fft(fft.ifft(X, axis=0, norm="ortho"), axis=1, norm="ortho")


def _bins(params):
    """DFT bin (of length M*Ns) carrying subcarrier m, with symmetric frequency placement."""
    return np.mod(psi_indices(params.M), params.samples_per_symbol) if params.M % 2 == 0 else np.arange(params.M)


def otfs_modulate(grid, params, cp=True):
    """Rectangular-pulse multicarrier frame; each T-block carries one row of the TF grid.

    The pulse is scaled to unit energy so that the DD symbols keep their energy.
    With ``cp`` the last ``Lcp`` delay bins of the frame are prefixed.
    """
    X = grid.check(params) if isinstance(grid, DdGrid) else np.asarray(grid, complex)
    if X.shape != (params.M, params.N):
        raise DomainError(f"grid shape {X.shape} does not match ({params.M}, {params.N})")
    sps = params.samples_per_symbol
    spec = np.zeros((params.N, sps), complex)
    spec[:, _bins(params)] = isfft(X)
    blocks = fft.ifft(spec, axis=1) * sps / np.sqrt(params.T)
    body = blocks.ravel()
    ncp = params.Lcp * params.Ns if cp else 0
    out = np.concatenate([body[body.size - ncp :], body]) if ncp else body
    return SampledWaveform(out, params.fs, -ncp * params.dt)


def otfs_demodulate(rx, params):
    """Rectangular matched filter per T-block, then SFFT."""
    sps = params.samples_per_symbol
    need = params.N * sps
    if not np.isclose(rx.fs, params.fs, rtol=1e-12):
        raise DomainError(f"waveform rate {rx.fs} differs from params.fs = {params.fs}")
    blocks = rx.on_lattice(0, need).reshape(params.N, sps)
    Y_tf = fft.fft(blocks, axis=1)[:, _bins(params)] * params.dt / np.sqrt(params.T)
    return DdGrid(sfft(Y_tf))
