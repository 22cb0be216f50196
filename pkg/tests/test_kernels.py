"""The numba kernels and their numpy fallbacks must agree; both are exercised directly."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oddm import kernels
from oddm._accel import HAVE_NUMBA
from oddm.params import QPSK_POINTS

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def direct_sinc2(y, spacing, kmax, centered):
    out = []
    for v in y:
        c = round(v / spacing) if centered else 0
        k = np.arange(c - kmax, c + kmax + 1)
        out.append(np.sum(np.sinc(v - k * spacing) ** 2))
    return np.array(out)


def direct_sinc(y, spacing, alt, kmax, centered):
    out = []
    for v in y:
        c = round(v / spacing) if centered else 0
        k = np.arange(c - kmax, c + kmax + 1)
        out.append(np.sum((-1.0) ** (k * alt) * np.sinc(v - k * spacing)))
    return np.array(out)


@pytest.mark.parametrize("impl", ["_sinc2_train_numpy", pytest.param("_sinc2_train_loops", marks=needs_numba)])
@pytest.mark.parametrize("spacing,centered", [(1, True), (1, False), (16, True)])
def test_sinc2_train_matches_direct_sum(impl, spacing, centered):
    y = np.concatenate([np.linspace(-40.3, 40.7, 301), [0.0, 3.0, 16.0, 1e-9]])
    starts = kernels._window_starts(y, spacing, 50, centered)
    got = getattr(kernels, impl)(y, spacing, 50, starts)
    assert np.allclose(got, direct_sinc2(y, spacing, 50, centered), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("impl", ["_sinc_train_numpy", pytest.param("_sinc_train_loops", marks=needs_numba)])
@pytest.mark.parametrize("spacing,alt", [(16, 15), (8, 0), (1, 1)])
def test_sinc_train_matches_direct_sum(impl, spacing, alt):
    y = np.concatenate([np.linspace(-300.2, 300.9, 401), [0.0, 16.0, -32.0]])
    starts = kernels._window_starts(y, spacing, 40, True)
    got = getattr(kernels, impl)(y, spacing, alt, 40, starts)
    assert np.allclose(got, direct_sinc(y, spacing, alt, 40, True), rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("impl", ["_sinc2_train_numpy", pytest.param("_sinc2_train_loops", marks=needs_numba)])
@settings(max_examples=30, deadline=None)
@given(x=st.floats(-1e4, 1e4, allow_nan=False))
def test_partition_of_unity(impl, x):
    K = 1000
    y = np.array([x])
    val = getattr(kernels, impl)(y, 1, K, kernels._window_starts(y, 1, K, True))[0]
    assert abs(val - 1) < 2 / (np.pi**2 * K)


def random_graph(seed, D=64, P=3):
    rng = np.random.default_rng(seed)
    shifts = rng.choice(D, size=P, replace=False)
    cols = (np.arange(D)[:, None] - shifts[None, :]) % D
    inv = (np.arange(D)[:, None] + shifts[None, :]) % D
    h = (rng.standard_normal((D, P)) + 1j * rng.standard_normal((D, P))) / np.sqrt(2 * P)
    x = QPSK_POINTS[rng.integers(0, 4, D)]
    y = (h * x[cols]).sum(axis=1) + 0.2 * (rng.standard_normal(D) + 1j * rng.standard_normal(D))
    return y, cols, h, inv, x


@needs_numba
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_mp_backends_agree(seed):
    y, cols, h, inv, _ = random_graph(seed)
    args = (y, cols, h, inv, QPSK_POINTS.astype(complex), 0.08, 20, 0.6, 1e-4)
    p1, i1 = kernels._mp_loops(*args)
    p2, i2 = kernels._mp_numpy(*args)
    assert i1 == i2
    assert np.allclose(p1, p2, atol=1e-9)


def test_mp_graph_transpose_consistent():
    _, cols, _, inv, _ = random_graph(3)
    for c in range(cols.shape[0]):
        for q in range(cols.shape[1]):
            assert cols[inv[c, q], q] == c


def test_dispatch_respects_backend_flag():
    import subprocess
    import sys

    code = "from oddm._accel import backend_name; print(backend_name())"
    out = subprocess.run(
        [sys.executable, "-c", code], env={"ODDM_DISABLE_NUMBA": "1", "PATH": ""}, capture_output=True, text=True
    )
    assert out.stdout.strip() == "numpy"
