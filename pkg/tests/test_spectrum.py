import json

import numpy as np
import pytest

from conftest import random_grid
from oddm.analog import analog_basis
from oddm.digital import digital_basis, digital_modulate
from oddm.kernels import sinc2_train
from oddm.params import DomainError, OddmParams, SampledWaveform
from oddm.pulse import srrc_pulse
from oddm.spectrum import (
    PsdCurve,
    analog_psd_core,
    detect_plateaus,
    freq_basis,
    oobe_metrics,
    psd_analytic_analog,
    psd_analytic_digital,
    psd_empirical,
    pulse_freq,
    tone_grid,
    waveform_spectrum,
)


def test_pulse_dc_value(desk_pulse):
    assert pulse_freq(desk_pulse, np.array([0.0]))[0] == pytest.approx(desk_pulse.taps.sum() * desk_pulse.dt)


def test_pulse_freq_matches_fft(desk, desk_pulse):
    wf = SampledWaveform(desk_pulse.taps, desk.fs, -desk_pulse.center * desk.dt)
    f, X = waveform_spectrum(wf, 4096)
    assert np.abs(pulse_freq(desk_pulse, f) - X).max() < 1e-12 * np.abs(X).max() * 1e3


def test_sidelobe_spacing_is_inverse_duration():
    p = OddmParams.desk().with_duration(2.5)
    pulse = srrc_pulse(p)
    f = np.linspace((1 + p.beta) * p.M / (2 * p.T) * 1.3, 0.5 * p.fs * 0.4, 20000)
    mag = np.abs(pulse_freq(pulse, f))
    nulls = f[1:-1][(mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])]
    spacing = np.median(np.diff(nulls))
    assert spacing == pytest.approx(1 / p.Ta, rel=0.1)


@pytest.mark.parametrize("system,basis", [("analog", analog_basis), ("digital", digital_basis)])
@pytest.mark.parametrize("m,n", [(0, 0), (5, 3), (17, 11)])
def test_freq_basis_matches_fft(system, basis, m, n, desk, desk_pulse):
    wf = basis(m, n, desk, desk_pulse)
    f, X = waveform_spectrum(wf, 8 * desk.N * desk.samples_per_symbol)
    band = np.abs(f) < 0.45 * desk.fs
    Y = freq_basis(m, n, desk, desk_pulse, f[band], system)
    assert np.linalg.norm(Y - X[band]) / np.linalg.norm(X[band]) < 1e-3


def test_freq_basis_systems_agree_at_n0(desk, desk_pulse):
    f = np.linspace(-3e5, 3e5, 777)
    assert np.array_equal(
        freq_basis(4, 0, desk, desk_pulse, f, "analog"), freq_basis(4, 0, desk, desk_pulse, f, "digital")
    )


def test_freq_basis_rejects_bad_index(desk, desk_pulse):
    with pytest.raises(DomainError):
        freq_basis(desk.M, 0, desk, desk_pulse, np.zeros(1), "analog")


def test_digital_psd_over_pulse_spectrum_is_constant(desk, desk_pulse):
    f = np.linspace(-4e5, 4e5, 3001)
    psd = psd_analytic_digital(desk, desk_pulse, f, kmax=1000)
    ratio = psd.power / np.abs(pulse_freq(desk_pulse, f)) ** 2
    assert np.abs(ratio / (desk.N * desk.M) - 1).max() < 1e-3


def test_single_shift_analog_core_equals_digital_shape(desk_pulse):
    # OddmParams insists on even N, so N = 1 is checked on the shared core
    T = 1 / 15000
    f = np.linspace(-2e5, 2e5, 1001)
    env = lambda x: np.abs(pulse_freq(desk_pulse, x)) ** 2  # noqa: E731
    core = analog_psd_core(f, 1, T, env, [0])
    direct = env(f) * sinc2_train(T * f, 1)
    assert np.allclose(core, direct, rtol=1e-14)


def test_analog_psd_peak_at_zero(desk, desk_pulse):
    psd = psd_analytic_analog(desk, desk_pulse, np.array([0.0]))
    bound = desk.N * desk.M * abs(pulse_freq(desk_pulse, np.array([0.0]))[0]) ** 2
    assert psd.power[0] == pytest.approx(bound, rel=1e-2)


def test_empirical_single_tone_peak(desk):
    f0 = 10 * desk.fs / 1024
    t = np.arange(1024) / desk.fs
    wf = SampledWaveform(np.exp(2j * np.pi * f0 * t), desk.fs, 0.0)
    curve = psd_empirical(iter([wf] * 3), 3, 1024)
    assert curve.freqs[np.argmax(curve.power)] == pytest.approx(f0)


def test_empirical_psd_independent_of_chunking(desk, desk_pulse, rng):
    frames = [digital_modulate(random_grid(rng, desk), desk, desk_pulse) for _ in range(7)]
    L = 2 * desk.N * desk.samples_per_symbol
    a = psd_empirical(iter(frames), 7, L, chunk=2).power
    b = psd_empirical(iter(frames), 7, L, chunk=50).power
    assert np.allclose(a, b, rtol=1e-13)


def test_empirical_psd_errors(desk):
    wf = SampledWaveform(np.ones(10, complex), desk.fs)
    with pytest.raises(DomainError):
        psd_empirical(iter([wf]), 2, 16)
    with pytest.raises(DomainError):
        psd_empirical(iter([wf]), 1, 4)


def test_oobe_flat_curve_is_unbounded():
    c = PsdCurve(np.linspace(-1, 1, 11), np.ones(11), "flat")
    assert oobe_metrics(c, [3])[3]["two_sided_hz"] == np.inf


def test_oobe_on_triangle():
    f = np.linspace(-50, 50, 1001)
    c = PsdCurve(f, 10 ** (-np.abs(f) / 10), "triangle")  # falls 1 dB per Hz
    m = oobe_metrics(c, [3, 20], band_edge_hz=30)
    assert m[3]["two_sided_hz"] == pytest.approx(6.0, abs=1e-9)
    assert m[20]["one_sided_hz"] == pytest.approx(20.0, abs=1e-9)
    assert m["peak_sidelobe_db"] == pytest.approx(-30.1, abs=1e-9)


def test_longer_pulse_lowers_sidelobes():
    levels = []
    for ta in (0.3, 2.5):
        p = OddmParams.desk().with_duration(ta)
        f = tone_grid(p, -0.45 * p.fs, 0.45 * p.fs, per_tone=2)
        for fn in (psd_analytic_analog, psd_analytic_digital):
            curve = fn(p, srrc_pulse(p), f)
            levels.append(oobe_metrics(curve, [3], band_edge_hz=0.8 * p.M / p.T)["peak_sidelobe_db"])
    assert levels[2] < levels[0] and levels[3] < levels[1]


def test_detect_plateaus():
    v = np.array([0, 0, 0, -3, -3, -7, -7, -7, -7])
    assert detect_plateaus(v) == [(0, 3), (3, 2), (5, 4)]


def test_psd_curve_csv_with_sidecar(tmp_path):
    c = PsdCurve(np.array([-1.0, 0.0, 1.0]), np.array([0.1, 1.0, 0.1]), "test", dict(trials=3))
    path = c.to_csv(tmp_path / "c.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "freq_hz,power_db" and lines[2] == "0.0,0.0"
    meta = json.loads((tmp_path / "c.json").read_text())
    assert meta["trials"] == 3 and meta["kind"] == "test"


def test_psd_curve_validation():
    with pytest.raises(DomainError):
        PsdCurve(np.array([1.0, 0.0]), np.array([1.0, 1.0]), "x")
    with pytest.raises(DomainError):
        PsdCurve(np.array([0.0, 1.0]), np.array([1.0, np.nan]), "x")


def test_analytic_psd_energy_matches_frame_energy(desk, desk_pulse):
    # integral of E|X(f)|^2 equals the expected frame energy M*N*Es (unit-energy basis, near-orthogonal)
    f = tone_grid(desk, -0.5 * desk.fs, 0.5 * desk.fs, per_tone=4)
    df = f[1] - f[0]
    for fn in (psd_analytic_analog, psd_analytic_digital):
        total = fn(desk, desk_pulse, f).power.sum() * df
        assert total == pytest.approx(desk.M * desk.N, rel=1e-2)
