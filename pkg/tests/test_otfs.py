import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_grid
from oddm.otfs import isfft, otfs_demodulate, otfs_modulate, sfft
from oddm.params import DdGrid, OddmParams, nmse_db


def isfft_direct(X):
    M, N = X.shape
    n = np.arange(N)
    m = np.arange(M)
    out = np.zeros((N, M), complex)
    for nd in range(N):
        for md in range(M):
            out[nd, md] = np.sum(X * np.exp(2j * np.pi * (np.outer(np.ones(M), n) * nd / N - np.outer(m, np.ones(N)) * md / M)))
    return out / np.sqrt(M * N)


def test_isfft_matches_definition(rng):
    X = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    assert np.abs(isfft(X) - isfft_direct(X)).max() < 1e-12


def test_isfft_of_impulse_is_constant(desk):
    tf = isfft(DdGrid.impulse(desk, 0, 0))
    assert tf.shape == (desk.N, desk.M)
    assert np.allclose(tf, 1 / np.sqrt(desk.M * desk.N))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31))
def test_isfft_unitary_and_inverted(M, N, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    tf = isfft(X)
    assert abs(np.linalg.norm(tf) - np.linalg.norm(X)) < 1e-12 * max(1, np.linalg.norm(X))
    assert np.abs(sfft(tf) - X).max() < 1e-12


def test_single_tf_symbol_is_rectangular(desk):
    # X_tf[0, 0] = 1 corresponds to X_dD = isfft^-1 of a unit TF impulse
    tf = np.zeros((desk.N, desk.M), complex)
    tf[0, 0] = 1
    wf = otfs_modulate(DdGrid(sfft(tf)), desk, cp=False)
    sps = desk.samples_per_symbol
    assert np.allclose(wf.samples[:sps], 1 / np.sqrt(desk.T))
    assert np.allclose(wf.samples[sps:], 0, atol=1e-9)


def test_frame_duration(desk, rng):
    wf = otfs_modulate(random_grid(rng, desk), desk, cp=False)
    assert np.isclose(len(wf) * wf.dt, desk.N * desk.T)
    p = OddmParams.desk(Lcp=4)
    wf = otfs_modulate(random_grid(rng, p), p)
    assert np.isclose(len(wf) * wf.dt, p.N * p.T + p.Tcp) and np.isclose(wf.t0, -p.Tcp)


def test_energy_preserved(desk, rng):
    X = random_grid(rng, desk)
    assert np.isclose(otfs_modulate(X, desk, cp=False).energy(), np.sum(np.abs(X.values) ** 2))


def test_loopback(rng):
    p = OddmParams.desk(Lcp=4)
    X = random_grid(rng, p)
    assert nmse_db(otfs_demodulate(otfs_modulate(X, p), p), X) < -200


def test_linearity(desk, rng):
    a, b = random_grid(rng, desk), random_grid(rng, desk)
    lhs = otfs_modulate(DdGrid(2j * a.values + b.values), desk).samples
    rhs = 2j * otfs_modulate(a, desk).samples + otfs_modulate(b, desk).samples
    assert np.abs(lhs - rhs).max() < 1e-9
