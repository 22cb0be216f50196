"""Expected power spectra, frequency-domain basis functions, and bandwidth metrics."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft

from .export import write_csv, write_json
from .kernels import sinc2_train, sinc_train
from .params import DomainError, psi_indices

DEFAULT_KMAX = 2048
_CHUNK = 1 << 22


@dataclass(frozen=True)
class PsdCurve:
    """Power (linear) against frequency in Hz."""

    freqs: np.ndarray
    power: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = np.asarray(self.freqs, float)
        p = np.asarray(self.power, float)
        if f.shape != p.shape or f.ndim != 1:
            raise DomainError("freqs and power must be 1-D of equal length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise DomainError("freqs must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise DomainError("power has non-finite values")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "power", p)

    def db(self, normalize=True):
        ref = self.power.max() if normalize else 1.0
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.power / ref)

    def to_csv(self, path, normalize=True):
        path = write_csv(path, ["freq_hz", "power_db"], [self.freqs, self.db(normalize)])
        meta = dict(self.meta, kind=self.kind, normalization="0 dB at maximum" if normalize else "absolute")
        write_json(Path(path).with_suffix(".json"), meta)
        return path


def pulse_freq(pulse, freqs):
    """DTFT of the sampled sub-pulse, scaled by the sample spacing, with t = 0 at the center tap."""
    f = np.asarray(freqs, float)
    flat = f.ravel()
    t = pulse.times()
    out = np.empty(flat.size, complex)
    step = max(1, _CHUNK // t.size)
    for a in range(0, flat.size, step):
        b = min(flat.size, a + step)
        out[a:b] = np.exp(-2j * np.pi * flat[a:b, None] * t[None, :]) @ pulse.taps
    return (out * pulse.dt).reshape(f.shape)


def tone_grid(params, f_lo, f_hi, per_tone=16):
    """Frequencies spaced 1/(per_tone N T) covering [f_lo, f_hi]."""
    step = params.doppler_res / per_tone
    k = np.arange(np.ceil(f_lo / step), np.floor(f_hi / step) + 1)
    return k * step


def freq_basis(m, n, params, pulse, freqs, system, kmax=DEFAULT_KMAX):
    """Fourier transform of the (m, n) basis function from the envelope times sinc-tone train form."""
    if not (0 <= m < params.M and 0 <= n < params.N):
        raise DomainError(f"(m, n) = ({m}, {n}) outside the grid")
    f = np.asarray(freqs, float)
    N, T = params.N, params.T
    psi = int(psi_indices(N)[n])
    if system == "analog":
        env = pulse_freq(pulse, f - psi / (N * T))
    elif system == "digital":
        env = pulse_freq(pulse, f)
    else:
        raise DomainError(f"system must be 'analog' or 'digital', got {system!r}")
    z = N * T * f - psi
    train = np.exp(-1j * np.pi * (N - 1) * z / N) * sinc_train(z, N, N - 1, kmax).reshape(f.shape)
    return np.sqrt(N) * np.exp(-2j * np.pi * f * m * params.delay_res) * env * train


def freq_basis_analog(m, n, params, pulse, freqs, kmax=DEFAULT_KMAX):
    return freq_basis(m, n, params, pulse, freqs, "analog", kmax)


def freq_basis_digital(m, n, params, pulse, freqs, kmax=DEFAULT_KMAX):
    return freq_basis(m, n, params, pulse, freqs, "digital", kmax)


def waveform_spectrum(wf, fft_len=None):
    """Continuous-time Fourier transform of a sampled waveform on the FFT bin grid (ascending)."""
    L = fft_len or len(wf)
    if L < len(wf):
        raise DomainError(f"fft_len {L} shorter than the waveform ({len(wf)})")
    X = fft.fft(wf.samples, L) * wf.dt
    f = fft.fftfreq(L, wf.dt)
    X = X * np.exp(-2j * np.pi * f * wf.t0)
    order = np.argsort(f)
    return f[order], X[order]


def tail_bound(kmax, spacing=1):
    """Upper bound on the omitted mass of a sinc^2 train truncated to 2*kmax+1 terms."""
    return 2.0 / (np.pi**2 * spacing**2 * kmax)


def _psd_meta(params, kmax, Es):
    return dict(params=params.as_dict(), Es=Es, kmax=kmax, tail_bound=tail_bound(kmax))


def analog_psd_core(freqs, N, T, envelope_sq, shifts, kmax=DEFAULT_KMAX):
    """sum over the given Doppler shifts of |A(f - s/NT)|^2 * sum_k sinc^2(NTf - kN - s)."""
    f = np.asarray(freqs, float)
    acc = np.zeros(f.size)
    for s in shifts:
        z = N * T * f - s
        acc += envelope_sq(f - s / (N * T)) * sinc2_train(z, N, kmax)
    return acc


def psd_analytic_analog(params, pulse, freqs, kmax=DEFAULT_KMAX, Es=1.0):
    N, M, T = params.N, params.M, params.T
    env = lambda f: np.abs(pulse_freq(pulse, f)) ** 2  # noqa: E731
    p = Es * N * M * analog_psd_core(freqs, N, T, env, range(-N // 2, N // 2), kmax)
    return PsdCurve(freqs, p, "analytic_analog", _psd_meta(params, kmax, Es))


def psd_analytic_digital(params, pulse, freqs, kmax=DEFAULT_KMAX, Es=1.0):
    N, M, T = params.N, params.M, params.T
    f = np.asarray(freqs, float)
    p = Es * N * M * np.abs(pulse_freq(pulse, f)) ** 2 * sinc2_train(N * T * f, 1, kmax)
    return PsdCurve(f, p, "analytic_digital", _psd_meta(params, kmax, Es))


def psd_empirical(frames, trials, fft_len, chunk=50):
    """Ensemble-averaged energy spectrum |X(f)|^2 of ``trials`` frames.

    ``frames`` is an iterable of :class:`SampledWaveform` (only the first
    ``trials`` are used). Partial sums are formed over fixed blocks of ``chunk``
    frames and added in order, so the result does not depend on how the frames
    were produced.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    acc = None
    block = None
    count = 0
    fs = None
    for wf in frames:
        if count == trials:
            break
        if len(wf) > fft_len:
            raise DomainError(f"fft_len {fft_len} shorter than a frame ({len(wf)})")
        fs = wf.fs
        S = np.abs(fft.fft(wf.samples, fft_len)) ** 2 * wf.dt**2
        block = S if block is None else block + S
        count += 1
        if count % chunk == 0:
            acc = block if acc is None else acc + block
            block = None
    if count < trials:
        raise DomainError(f"frame source ran out after {count} of {trials} frames")
    if block is not None:
        acc = block if acc is None else acc + block
    f = fft.fftshift(fft.fftfreq(fft_len, 1.0 / fs))
    p = fft.fftshift(acc / trials)
    meta = dict(trials=trials, fft_len=fft_len, normalization="ensemble mean of |X(f)|^2, X(f) = dt * DFT")
    return PsdCurve(f, p, "empirical", meta)


def _edge(f, level_db, start, step, threshold):
    """First crossing below ``threshold`` walking from ``start`` in direction ``step``."""
    i = start
    while 0 <= i + step < f.size:
        j = i + step
        if level_db[j] < threshold:
            a, b = level_db[i], level_db[j]
            w = (a - threshold) / (a - b) if a != b else 0.0
            return f[i] + w * (f[j] - f[i])
        i = j
    return None


def oobe_metrics(curve, thresholds_db, band_edge_hz=None):
    """Bandwidths at which the PSD first falls each threshold below its maximum.

    Returns a dict keyed by threshold with ``lower_hz``, ``upper_hz``,
    ``two_sided_hz`` and ``one_sided_hz`` (the upper edge, measured from 0 Hz);
    unreachable thresholds give ``inf``. With ``band_edge_hz`` the peak level
    (dB re maximum) over ``|f| > band_edge_hz`` is added as ``peak_sidelobe_db``.
    """
    f = curve.freqs
    lv = curve.db(normalize=True)
    peak = int(np.argmax(lv))
    out = {}
    for th in thresholds_db:
        up = _edge(f, lv, peak, +1, -float(th))
        lo = _edge(f, lv, peak, -1, -float(th))
        if up is None or lo is None:
            out[th] = dict(lower_hz=np.inf if lo is None else lo, upper_hz=np.inf if up is None else up,
                           two_sided_hz=np.inf, one_sided_hz=np.inf if up is None else up)
        else:
            out[th] = dict(lower_hz=lo, upper_hz=up, two_sided_hz=up - lo, one_sided_hz=up)
    if band_edge_hz is not None:
        outside = np.abs(f) > band_edge_hz
        out["peak_sidelobe_db"] = float(lv[outside].max()) if np.any(outside) else -np.inf
    return out


def detect_plateaus(values_db, tol_db=0.01):
    """Split a sequence into runs of consecutive values equal within ``tol_db``.

    Returns a list of ``(start, length)`` pairs.
    """
    v = np.asarray(values_db, float)
    runs = []
    start = 0
    for i in range(1, v.size + 1):
        if i == v.size or abs(v[i] - v[i - 1]) > tol_db:
            runs.append((start, i - start))
            start = i
    return runs
