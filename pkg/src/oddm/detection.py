"""On-grid delay-Doppler effective channel, symbol detectors and BER accounting."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .kernels import mp_posteriors
from .params import QPSK_POINTS, DdGrid, DomainError, qpsk_hard

DENSE_LIMIT = 2048


class SingularChannelError(np.linalg.LinAlgError):
    """The LMMSE system has no unique solution."""


@dataclass(frozen=True)
class EffectiveChannel:
    """Y[m, n] = sum_p gains[p, m, n] * X[(m - l_p) mod M, (n - k_p) mod N].

    Grids are vectorized row-major (index m*N + n).
    """

    shifts: np.ndarray  # (P, 2) integer (l, k)
    gains: np.ndarray  # (P, M, N) complex
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def P(self):
        return self.shifts.shape[0]

    @property
    def shape(self):
        return self.gains.shape[1:]

    def apply(self, grid):
        X = grid.values if isinstance(grid, DdGrid) else np.asarray(grid)
        out = np.zeros(self.shape, complex)
        for (l, k), g in zip(self.shifts, self.gains):
            out += g * np.roll(X, (l, k), axis=(0, 1))
        return DdGrid(out)

    def sparse_rows(self):
        """``(cols, vals, inv)``: per observation the P input indices and gains, plus the transpose map."""
        M, N = self.shape
        m, n = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
        l = self.shifts[:, 0][:, None, None]
        k = self.shifts[:, 1][:, None, None]
        cols = (((m - l) % M) * N + (n - k) % N).reshape(self.P, -1).T
        inv = (((m + l) % M) * N + (n + k) % N).reshape(self.P, -1).T
        vals = self.gains.reshape(self.P, -1).T
        return cols, vals, inv

    def dense(self, allow_large=False):
        M, N = self.shape
        if M * N > DENSE_LIMIT and not allow_large:
            raise DomainError(f"dense operator of size {M * N} exceeds {DENSE_LIMIT}")
        cols, vals, _ = self.sparse_rows()
        H = np.zeros((M * N, M * N), complex)
        rows = np.repeat(np.arange(M * N), self.P)
        np.add.at(H, (rows, cols.ravel()), vals.ravel())
        return H


def _merge(indices, gains):
    merged = {}
    for (l, k), g in zip(indices, gains):
        merged[(l, k)] = merged.get((l, k), 0) + g
    return list(merged.keys()), list(merged.values())


def effective_channel(ch, params, allow_beyond_cp=False):
    """Shift-operator model of an on-grid channel with CP-protected frames.

    For a tap with delay l T/M and Doppler k/(NT) the gain on output (m, n) is
    h exp(j2pi k [m-l]_M / (MN)), times exp(-j2pi n/N) when m < l (symbols that
    wrapped through the cyclic prefix come from the previous T-block).
    Taps sharing the same (l, k) are merged.
    """
    idx, gains = _merge(ch.grid_indices(params), [t.gain for t in ch.taps])
    M, N = params.M, params.N
    if not allow_beyond_cp and max(l for l, _ in idx) > params.Lcp:
        raise DomainError(f"tap delay exceeds the cyclic prefix ({params.Lcp} bins)")
    m = np.arange(M)[:, None]
    n = np.arange(N)[None, :]
    out = np.empty((len(idx), M, N), complex)
    for p, ((l, k), h) in enumerate(zip(idx, gains)):
        src = (m - l) % M
        g = h * np.exp(2j * np.pi * k * src / (M * N)) * np.ones((1, N))
        out[p] = np.where(m < l, g * np.exp(-2j * np.pi * n / N), g)
    return EffectiveChannel(np.array(idx, dtype=np.int64).reshape(-1, 2), out, dict(source="model"))


def probe_residual(H, pipeline, params):
    """Largest per-symbol deviation of ``pipeline`` from ``H`` over all unit-impulse inputs (dB, 20 log10)."""
    worst = 0.0
    for m in range(params.M):
        for n in range(params.N):
            x = DdGrid.impulse(params, m, n)
            worst = max(worst, np.abs(pipeline(x).values - H.apply(x).values).max())
    return 20 * math.log10(worst) if worst > 0 else -math.inf


def calibrate_effective_channel(ch, params, pipeline, allow_beyond_cp=False):
    """Measure the per-tap gains by driving ``pipeline`` with unit impulses.

    ``pipeline`` maps a DdGrid to the received DdGrid. Returns an
    EffectiveChannel whose meta holds the worst per-symbol residual (dB) left
    after calibration.
    """
    model = effective_channel(ch, params, allow_beyond_cp)
    M, N = params.M, params.N
    gains = np.zeros_like(model.gains)
    responses = {}
    for m in range(M):
        for n in range(N):
            Y = pipeline(DdGrid.impulse(params, m, n)).values
            responses[(m, n)] = Y
            for p, (l, k) in enumerate(model.shifts):
                gains[p, (m + l) % M, (n + k) % N] = Y[(m + l) % M, (n + k) % N]
    cal = EffectiveChannel(model.shifts, gains, dict(source="calibrated"))
    worst = 0.0
    for (m, n), Y in responses.items():
        worst = max(worst, np.abs(Y - cal.apply(DdGrid.impulse(params, m, n)).values).max())
    cal.meta["residual_db"] = 20 * math.log10(worst) if worst > 0 else -math.inf
    return cal


def lmmse_detect(Y, H, noise_var):
    """Soft estimate (H^H H + s^2 I)^-1 H^H y on the vectorized grid."""
    y = (Y.values if isinstance(Y, DdGrid) else np.asarray(Y)).ravel()
    A = H.dense()
    G = A.conj().T @ A
    if noise_var == 0 and np.linalg.matrix_rank(G) < G.shape[0]:
        raise SingularChannelError("noiseless LMMSE with a rank-deficient channel")
    G[np.diag_indices_from(G)] += noise_var
    try:
        x = np.linalg.solve(G, A.conj().T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError(str(exc)) from exc
    return DdGrid(x.reshape(H.shape))


def mp_detect(Y, H, noise_var, max_iters=30, damping=0.6, tol=1e-4):
    """Hard 4-QAM decisions from Gaussian-approximation message passing."""
    D = int(np.prod(H.shape))
    if 4 * H.P > D:
        raise DomainError(f"{H.P} taps on {D} symbols is not sparse; use lmmse_detect")
    y = (Y.values if isinstance(Y, DdGrid) else np.asarray(Y)).ravel()
    cols, vals, inv = H.sparse_rows()
    post, iters = mp_posteriors(y, cols, vals, inv, QPSK_POINTS, noise_var, max_iters, damping, tol)
    hard = QPSK_POINTS[np.argmax(post, axis=1)].reshape(H.shape)
    return DdGrid(hard)


def hard_decisions(soft):
    return DdGrid(qpsk_hard(soft.values if isinstance(soft, DdGrid) else soft))


@dataclass(frozen=True)
class BerResult:
    errors: int
    total: int
    rate: float
    ci_lo: float
    ci_hi: float

    def __add__(self, other):
        return ber_from_counts(self.errors + other.errors, self.total + other.total)


def wilson_interval(errors, total, confidence=0.95):
    z = norm.ppf(0.5 + confidence / 2)
    p = errors / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == total else min(1.0, centre + half)
    return lo, hi


def ber_from_counts(errors, total):
    if total <= 0:
        raise DomainError("no bits counted")
    lo, hi = wilson_interval(errors, total)
    return BerResult(int(errors), int(total), errors / total, lo, hi)


def ber_count(tx_bits, rx_bits):
    a = np.asarray(tx_bits).ravel()
    b = np.asarray(rx_bits).ravel()
    if a.size != b.size:
        raise DomainError(f"bit streams differ in length ({a.size} vs {b.size})")
    return ber_from_counts(int(np.count_nonzero(a != b)), a.size)
