"""Ambiguity functions, Gram matrices and the offset-averaged orthogonality metric."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .export import write_csv
from .params import DomainError, align
from .pulse import build_ddop, build_ddop_ce

GRAM_SIZE_LIMIT = 1024


class GramSizeError(DomainError):
    """A full Gram matrix was requested above the size guard."""


@dataclass(frozen=True)
class AmbiguitySurface:
    """Values on the (2M-1) x (2N-1) offset grid; row i is m_bar = i - (M-1), column j is n_bar = j - (N-1)."""

    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def M(self):
        return (self.values.shape[0] + 1) // 2

    @property
    def N(self):
        return (self.values.shape[1] + 1) // 2

    def at(self, m_bar, n_bar):
        return self.values[m_bar + self.M - 1, n_bar + self.N - 1]

    @property
    def center(self):
        return self.at(0, 0)

    def magnitude_db(self):
        with np.errstate(divide="ignore"):
            return 20 * np.log10(np.abs(self.values))

    def off_center(self, mask=None):
        """Magnitudes with the (0, 0) cell removed (optionally restricted by ``mask``)."""
        keep = np.ones(self.values.shape, bool)
        keep[self.M - 1, self.N - 1] = False
        if mask is not None:
            keep &= mask
        return np.abs(self.values[keep])

    def doppler_mask(self):
        """True where n_bar != 0."""
        mask = np.ones(self.values.shape, bool)
        mask[:, self.N - 1] = False
        return mask

    def to_csv(self, path):
        mb, nb = np.meshgrid(np.arange(-(self.M - 1), self.M), np.arange(-(self.N - 1), self.N), indexing="ij")
        return write_csv(path, ["m_bar", "n_bar", "mag_db"], [mb.ravel(), nb.ravel(), self.magnitude_db().ravel()])


def ambiguity(u1, u2, params, kind="auto_u"):
    """A(m_bar, n_bar) = integral u1(t) u2*(t - m_bar T/M) exp(-j 2 pi n_bar F (t - m_bar T/M)) dt.

    Each delay row is a product folded modulo the 1/F period and read off with
    one FFT.
    """
    if not (math.isclose(u1.fs, params.fs, rel_tol=1e-12) and math.isclose(u2.fs, params.fs, rel_tol=1e-12)):
        raise DomainError("waveform rate differs from params.fs")
    M, N, Ns = params.M, params.N, params.Ns
    period = N * M * Ns
    a, b = u1.samples, u2.samples.conj()
    s1, s2 = u1.start_index, u2.start_index
    nb = np.arange(-(N - 1), N)
    out = np.zeros((2 * M - 1, 2 * N - 1), complex)
    for row, mb in enumerate(range(-(M - 1), M)):
        shift = s2 + mb * Ns  # lattice index of u2's first sample after the delay
        lo, hi = max(s1, shift), min(s1 + a.size, shift + b.size)
        if hi <= lo:
            continue
        prod = a[lo - s1 : hi - s1] * b[lo - shift : hi - shift]
        # phase reference t - m_bar T/M  <->  lattice index k - m_bar*Ns
        k0 = lo - mb * Ns
        r = k0 % period
        buf = np.zeros(-(-(r + prod.size) // period) * period, complex)
        buf[r : r + prod.size] = prod
        spec = fft.fft(buf.reshape(-1, period).sum(axis=0))
        out[row] = spec[nb % period]
    return AmbiguitySurface(out * params.dt, kind)


def auto_ambiguity(params, pulse):
    u = build_ddop(params, pulse).wf
    return ambiguity(u, u, params, "auto_u")


def cross_ambiguity_ce(params, pulse, scale="unit_energy"):
    """Cross-ambiguity of the generalized train against the plain train.

    The plain train is delayed by D*T so that the generalized train supplies D
    sub-pulses on either side of it.
    """
    uce = build_ddop_ce(params, pulse, scale).wf
    u = build_ddop(params, pulse).wf.shifted(params.D * params.T)
    surf = ambiguity(uce, u, params, "cross_uce_u")
    return AmbiguitySurface(surf.values, surf.kind, dict(scale=scale, reference_delay_s=params.D * params.T))


def gram(basis_fn, params, subset=None, allow_large=False):
    """Matrix of inner products <phi_i, phi_j> = integral phi_i phi_j^* dt.

    ``subset`` is a list of (m, n) pairs; by default every pair in row-major
    order (index m*N + n).
    """
    if subset is None:
        if params.M * params.N > GRAM_SIZE_LIMIT and not allow_large:
            raise GramSizeError(
                f"full Gram of size {params.M * params.N} exceeds the limit {GRAM_SIZE_LIMIT}; pass allow_large=True"
            )
        subset = [(m, n) for m in range(params.M) for n in range(params.N)]
    if len(subset) == 0:
        raise DomainError("empty subset")
    _, B = align([basis_fn(m, n) for m, n in subset])
    return (B @ B.conj().T) * params.dt


def lambda_metric(G, params, kind="gram_lambda"):
    """Mean of |G[(m, n), (m + m_bar, n + n_bar)]| over the valid anchors, for every offset."""
    M, N = params.M, params.N
    if G.shape != (M * N, M * N):
        raise DomainError(f"Gram shape {G.shape} does not match M*N = {M * N}")
    A = np.abs(G).reshape(M, N, M, N)
    out = np.zeros((2 * M - 1, 2 * N - 1))
    for i, mb in enumerate(range(-(M - 1), M)):
        m = np.arange(max(0, -mb), min(M, M - mb))
        for j, nb in enumerate(range(-(N - 1), N)):
            n = np.arange(max(0, -nb), min(N, N - nb))
            out[i, j] = A[m[:, None], n[None, :], (m + mb)[:, None], (n + nb)[None, :]].mean()
    return AmbiguitySurface(out.astype(complex), kind)


def _digital_lambda_numpy(R, params):
    """Offset-class Gram magnitudes of the digital basis from the sampled pulse autocorrelation.

    <phi_{m,n}, phi_{m',n'}> = (1/N) sum_i R(iT + m_bar T/M) exp(-j2pi n' i/N) G(n_bar, i),
    G(n_bar, i) = sum over the overlapping sub-pulse indices k of exp(-j2pi n_bar k/N).
    """
    M, N, Ns = params.M, params.N, params.Ns
    sps = params.samples_per_symbol
    half = (R.size - 1) // 2
    i = np.arange(-(N - 1), N)
    mb = np.arange(-(M - 1), M)
    lag = i[None, :] * sps + mb[:, None] * Ns
    Rm = np.where(np.abs(lag) <= half, R[np.clip(lag + half, 0, R.size - 1)], 0.0)  # (2M-1, 2N-1)
    nb = np.arange(-(N - 1), N)
    k = np.arange(N)
    valid = (k[None, :] + i[:, None] >= 0) & (k[None, :] + i[:, None] < N)  # (i, k)
    G = np.exp(-2j * np.pi * nb[:, None] * k[None, :] / N) @ valid.T  # (n_bar, i)
    n2 = np.arange(N)
    P = np.exp(-2j * np.pi * np.outer(n2, i) / N)  # (n', i)
    psi = np.einsum("ai,bi,ci->abc", Rm, G, P, optimize=True) / N  # (m_bar, n_bar, n')
    mag = np.abs(psi)
    out = np.zeros((2 * M - 1, 2 * N - 1))
    for j, d in enumerate(nb):
        sel = np.arange(max(0, d), min(N, N + d))
        out[:, j] = mag[:, j, sel].mean(axis=1)
    return out


def lambda_digital(params, pulse):
    """Lambda surface of the digital basis, computed per offset class without a full Gram."""
    R = pulse.autocorrelation()
    return AmbiguitySurface(_digital_lambda_numpy(R, params).astype(complex), "gram_digital_lambda")


def lambda_from_basis(basis_fn, params, allow_large=False):
    """Lambda surface from a direct Gram of ``basis_fn`` (desk scale)."""
    return lambda_metric(gram(basis_fn, params, allow_large=allow_large), params)
