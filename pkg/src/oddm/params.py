"""Frame parameters, grid containers and index arithmetic."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .export import read_csv, write_csv

SYMBOL_PERIOD = 1.0 / 15000.0


class DomainError(ValueError):
    """Raised when an input violates an operation's preconditions."""


def mod_index(n, N):
    """Non-negative remainder of ``n`` modulo ``N``."""
    if N < 1:
        raise DomainError(f"modulus must be >= 1, got {N}")
    return n % N


def psi_index(n, N):
    """Map ``n`` in [0, N) to the symmetric range [-N/2, N/2)."""
    if N < 1 or N % 2:
        raise DomainError(f"N must be a positive even integer, got {N}")
    if not 0 <= n < N:
        raise DomainError(f"index {n} outside [0, {N})")
    return n if n < N // 2 else n - N


def psi_indices(N):
    """Vector ``[psi_index(n, N) for n in range(N)]``."""
    if N < 1 or N % 2:
        raise DomainError(f"N must be a positive even integer, got {N}")
    n = np.arange(N)
    return np.where(n < N // 2, n, n - N)


def q_for_duration(ta_over_t, M):
    """Smallest Q with 2Q/M >= ta_over_t (sub-pulse span in symbol periods)."""
    return max(1, math.ceil(round(ta_over_t * M / 2, 9)))


@dataclass(frozen=True)
class OddmParams:
    """Frame and sub-pulse parameters.

    ``M`` delay bins, ``N`` Doppler bins, symbol period ``T``, sub-pulse
    half-span ``Q`` (in delay bins), roll-off ``beta``, oversampling ``Ns``
    per delay bin and cyclic-prefix length ``Lcp`` in delay bins.
    """

    M: int = 128
    N: int = 32
    T: float = SYMBOL_PERIOD
    Q: int = 20
    beta: float = 0.15
    Ns: int = 8
    Lcp: int = 0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise DomainError("; ".join(problems))

    def problems(self):
        out = []
        for name in ("M", "N", "Q", "Ns", "Lcp"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                out.append(f"{name} must be an integer, got {v!r}")
        if out:
            return out
        if self.M < 1:
            out.append(f"M must be >= 1, got {self.M}")
        if self.N < 2 or self.N % 2:
            out.append(f"N must be a positive even integer, got {self.N}")
        if not (self.T > 0 and math.isfinite(self.T)):
            out.append(f"T must be positive, got {self.T}")
        if self.Q < 1:
            out.append(f"Q must be >= 1, got {self.Q}")
        if not 0.0 <= self.beta <= 1.0:
            out.append(f"beta must lie in [0, 1], got {self.beta}")
        if self.Ns < 4:
            out.append(f"Ns must be >= 4, got {self.Ns}")
        if self.Lcp < 0 or (self.M >= 1 and self.Lcp >= self.M):
            out.append(f"Lcp must lie in [0, M), got {self.Lcp}")
        return out

    @classmethod
    def desk(cls, **overrides):
        base = dict(M=32, N=16, Q=5, Ns=8, beta=0.15, Lcp=0)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def full(cls, **overrides):
        base = dict(M=128, N=32, Q=20, Ns=8, beta=0.15, Lcp=0)
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes):
        return replace(self, **changes)

    def with_duration(self, ta_over_t):
        """Copy with Q chosen so that Ta is about ``ta_over_t`` symbol periods."""
        return replace(self, Q=q_for_duration(ta_over_t, self.M))

    @property
    def delay_res(self):
        return self.T / self.M

    @property
    def doppler_res(self):
        return 1.0 / (self.N * self.T)

    @property
    def fs(self):
        return self.Ns * self.M / self.T

    @property
    def dt(self):
        return self.T / (self.M * self.Ns)

    @property
    def Ta(self):
        return 2 * self.Q * self.T / self.M

    @property
    def D(self):
        return -(-2 * self.Q // self.M)

    @property
    def Tcp(self):
        return self.Lcp * self.delay_res

    @property
    def taps_len(self):
        return 2 * self.Q * self.Ns + 1

    @property
    def samples_per_symbol(self):
        """Samples per symbol period T."""
        return self.M * self.Ns

    def as_dict(self):
        return dict(M=self.M, N=self.N, T=self.T, Q=self.Q, beta=self.beta, Ns=self.Ns, Lcp=self.Lcp)

    def derived(self):
        return dict(
            delay_res_s=self.delay_res,
            doppler_res_hz=self.doppler_res,
            fs_hz=self.fs,
            Ta_s=self.Ta,
            Ta_over_T=self.Ta / self.T,
            D=self.D,
            Tcp_s=self.Tcp,
        )


@dataclass(frozen=True)
class DdGrid:
    """M x N delay-Doppler symbol matrix indexed ``[m, n]``."""

    values: np.ndarray
    Es: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2:
            raise DomainError(f"grid must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def check(self, params):
        if self.values.shape != (params.M, params.N):
            raise DomainError(f"grid shape {self.values.shape} does not match (M, N) = ({params.M}, {params.N})")
        return self.values

    @classmethod
    def zeros(cls, params):
        return cls(np.zeros((params.M, params.N), complex))

    @classmethod
    def impulse(cls, params, m, n):
        v = np.zeros((params.M, params.N), complex)
        v[m, n] = 1.0
        return cls(v)

    def to_csv(self, path):
        M, N = self.values.shape
        m, n = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
        return write_csv(
            path,
            ["m", "n", "re", "im"],
            [m.ravel(), n.ravel(), self.values.real.ravel(), self.values.imag.ravel()],
        )

    @classmethod
    def from_csv(cls, path):
        _, rows = read_csv(path)
        a = np.array([[float(c) for c in r] for r in rows])
        m, n = a[:, 0].astype(int), a[:, 1].astype(int)
        v = np.zeros((m.max() + 1, n.max() + 1), complex)
        v[m, n] = a[:, 2] + 1j * a[:, 3]
        return cls(v)


@dataclass(frozen=True)
class SampledWaveform:
    """Uniformly sampled complex baseband signal; sample k sits at ``t0 + k/fs``."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1:
            raise DomainError("waveform samples must be 1-D")
        if not self.fs > 0:
            raise DomainError(f"fs must be positive, got {self.fs}")
        if not np.all(np.isfinite(s)):
            raise DomainError("waveform has non-finite samples")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def dt(self):
        return 1.0 / self.fs

    def times(self):
        return self.t0 + np.arange(self.samples.size) / self.fs

    def energy(self):
        return float(np.vdot(self.samples, self.samples).real / self.fs)

    @property
    def start_index(self):
        """Index of sample 0 on the global lattice ``k/fs``."""
        k = self.t0 * self.fs
        r = round(k)
        if abs(k - r) > 1e-6:
            raise DomainError(f"t0 = {self.t0} is not on the sample lattice of fs = {self.fs}")
        return int(r)

    def shifted(self, tau):
        """The same samples delayed by ``tau`` seconds."""
        return SampledWaveform(self.samples, self.fs, self.t0 + tau, dict(self.meta))

    def on_lattice(self, start_index, length):
        """Samples on global indices ``start_index .. start_index+length-1`` (zero outside support)."""
        out = np.zeros(length, complex)
        lo = max(start_index, self.start_index)
        hi = min(start_index + length, self.start_index + self.samples.size)
        if hi > lo:
            out[lo - start_index : hi - start_index] = self.samples[lo - self.start_index : hi - self.start_index]
        return out

    def to_csv(self, path):
        return write_csv(
            path,
            ["index", "time_s", "re", "im"],
            [np.arange(self.samples.size), self.times(), self.samples.real, self.samples.imag],
        )

    @classmethod
    def from_csv(cls, path):
        _, rows = read_csv(path)
        a = np.array([[float(c) for c in r] for r in rows])
        t = a[:, 1]
        fs = 1.0 / (t[1] - t[0]) if t.size > 1 else 1.0
        return cls(a[:, 2] + 1j * a[:, 3], fs, t[0])


def align(waveforms):
    """Place waveforms sharing ``fs`` on one common sample lattice.

    Returns ``(start_index, matrix)`` where row i holds waveform i.
    """
    fs = waveforms[0].fs
    for w in waveforms:
        if not math.isclose(w.fs, fs, rel_tol=1e-12):
            raise DomainError("sample rates differ")
    lo = min(w.start_index for w in waveforms)
    hi = max(w.start_index + len(w) for w in waveforms)
    return lo, np.stack([w.on_lattice(lo, hi - lo) for w in waveforms])


# 4-QAM, Gray mapped: first bit -> sign of I, second bit -> sign of Q.
QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


def qam_map(bits, params, order=4):
    """Map ``2*M*N`` bits onto a unit-energy Gray 4-QAM grid."""
    if order != 4:
        raise DomainError(f"only 4-QAM is supported, got order {order}")
    bits = np.asarray(bits).astype(np.int64).ravel()
    need = 2 * params.M * params.N
    if bits.size != need:
        raise DomainError(f"expected {need} bits, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise DomainError("bits must be 0 or 1")
    sym = ((1 - 2 * bits[0::2]) + 1j * (1 - 2 * bits[1::2])) / np.sqrt(2)
    return DdGrid(sym.reshape(params.M, params.N))


def qam_demap(grid):
    """Hard-decision inverse of :func:`qam_map`."""
    v = grid.values if isinstance(grid, DdGrid) else np.asarray(grid)
    v = v.ravel()
    bits = np.empty(2 * v.size, dtype=np.int8)
    bits[0::2] = v.real < 0
    bits[1::2] = v.imag < 0
    return bits


def qpsk_hard(values):
    """Nearest 4-QAM point for each entry."""
    v = np.asarray(values)
    return (np.where(v.real < 0, -1.0, 1.0) + 1j * np.where(v.imag < 0, -1.0, 1.0)) / np.sqrt(2)


def random_bits(rng, params):
    return rng.integers(0, 2, size=2 * params.M * params.N, dtype=np.int8)


def nmse_db(estimate, reference):
    """Normalized squared error ``10 log10(|e - r|^2 / |r|^2)``."""
    e = np.asarray(estimate.values if isinstance(estimate, DdGrid) else estimate)
    r = np.asarray(reference.values if isinstance(reference, DdGrid) else reference)
    return float(10 * np.log10(np.sum(np.abs(e - r) ** 2) / np.sum(np.abs(r) ** 2)))
