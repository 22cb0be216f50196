import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oddm.orthogonality import gram
from oddm.params import OddmParams
from oddm.pulse import build_ddop, build_ddop_ce, build_ddop_cp, srrc, srrc_pulse


def srrc_reference(t, Ts, beta):
    """Closed-form SRRC with removable singularities resolved through mpmath limits."""
    import mpmath as mp

    def f(x):
        x = mp.mpf(x) / Ts
        num = mp.sin(mp.pi * x * (1 - beta)) + 4 * beta * x * mp.cos(mp.pi * x * (1 + beta))
        den = mp.pi * x * (1 - (4 * beta * x) ** 2)
        return num / den / mp.sqrt(Ts)

    out = []
    for ti in t:
        try:
            out.append(float(f(ti)))
        except ZeroDivisionError:
            out.append(float(mp.limit(f, ti)))
    return np.array(out)


def test_srrc_matches_closed_form_including_singular_points():
    Ts, beta = 1.0, 0.25
    t = np.array([0.0, 0.3, Ts / (4 * beta), -Ts / (4 * beta), 1.7, 2.0])
    assert np.allclose(srrc(t, Ts, beta), srrc_reference(t, Ts, beta), rtol=1e-7, atol=1e-9)


def test_srrc_beta_zero_peak():
    Ts = 2.0
    assert srrc(np.array([0.0]), Ts, 0.0)[0] == pytest.approx(1 / np.sqrt(Ts))


def test_pulse_shape_and_energy(desk, desk_pulse):
    assert desk_pulse.taps.size == 2 * desk.Q * desk.Ns + 1
    assert abs(desk_pulse.energy - 1) < 1e-9
    c = desk_pulse.center
    assert np.array_equal(desk_pulse.taps[c + 1 :], desk_pulse.taps[:c][::-1])


# Frozen oracle: the truncated-SRRC autocorrelation at the delay lattice
# (full scale, beta = 0.15, Q = 20) stays below 1e-2 for 1 <= |k| <= 2Q-1.
def test_autocorrelation_lattice_residual_full_scale():
    p = OddmParams.full()
    R = srrc_pulse(p).autocorrelation()
    half = (R.size - 1) // 2
    assert R[half] == pytest.approx(1.0, abs=1e-12)
    lags = np.arange(1, 2 * p.Q) * p.Ns
    assert np.abs(R[half + lags]).max() < 1e-2


def test_ddop_sub_pulse_peaks(desk, desk_pulse):
    u = build_ddop(desk, desk_pulse).wf
    for n in range(desk.N):
        i = round(n * desk.T / desk.dt) - u.start_index
        assert u.samples[i] == pytest.approx(desk_pulse.taps[desk_pulse.center] / np.sqrt(desk.N))


@pytest.mark.parametrize("ta,tol", [(0.3, 1e-6), (1.0, 1e-6), (10.0, 1e-2)])
def test_ddop_energy(ta, tol):
    p = OddmParams.desk().with_duration(ta)
    assert abs(build_ddop(p, srrc_pulse(p)).wf.energy() - 1) < tol


def test_ddop_cp_matches_plain_below_cp(desk_pulse):
    p = OddmParams.desk(Lcp=4)
    plain = build_ddop(p, desk_pulse).wf
    for m in range(p.M - p.Lcp):
        w = build_ddop_cp(p, desk_pulse, m).wf
        assert np.array_equal(w.samples, plain.samples) and w.t0 == plain.t0


def test_ddop_cp_last_row_prepends_one_sub_pulse(desk_pulse):
    p = OddmParams.desk(Lcp=4)
    plain = build_ddop(p, desk_pulse).wf
    w = build_ddop_cp(p, desk_pulse, p.M - 1).wf
    sps = p.samples_per_symbol
    assert w.start_index == plain.start_index - sps
    assert np.allclose(w.samples[: desk_pulse.taps.size], desk_pulse.taps / np.sqrt(p.N))
    assert np.array_equal(w.samples[sps:], plain.samples)


@pytest.mark.parametrize("ta,count", [(0.3, 18), (10.0, 36)])
def test_ddop_ce_sub_pulse_count(ta, count):
    p = OddmParams.desk().with_duration(ta)
    d = build_ddop_ce(p, srrc_pulse(p))
    assert d.n_subpulses == count == p.N + 2 * p.D


def test_ddop_ce_scales(desk, desk_pulse):
    raw = build_ddop_ce(desk, desk_pulse, "raw").wf
    unit = build_ddop_ce(desk, desk_pulse, "unit_energy").wf
    assert raw.energy() == pytest.approx(desk.N + 2 * desk.D, rel=1e-6)
    assert unit.energy() == pytest.approx(1.0, rel=1e-6)
    assert raw.t0 == pytest.approx(-desk.Ta / 2)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([0.0, 0.1, 0.15, 0.5, 1.0]), st.integers(2, 12))
def test_pulse_symmetric_and_unit_energy(beta, Q):
    p = OddmParams.desk(beta=beta, Q=Q)
    a = srrc_pulse(p)
    assert np.all(np.isfinite(a.taps))
    assert np.array_equal(a.taps, a.taps[::-1])
    assert abs(a.energy - 1) < 1e-9


def test_single_element_gram_is_unit(desk, desk_pulse):
    from oddm.analog import analog_basis

    G = gram(lambda m, n: analog_basis(m, n, desk, desk_pulse), desk, subset=[(3, 2)])
    assert G.shape == (1, 1) and abs(G[0, 0] - 1) < 1e-3
