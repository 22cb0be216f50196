"""Hot loops with a numba implementation and a vectorized numpy fallback.

The public names dispatch on :data:`oddm._accel.USE_NUMBA`; both variants are
importable directly for testing and benchmarking.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

_CHUNK = 1 << 22  # elements per broadcast block in the numpy fallbacks


def _window_starts(y, spacing, kmax, centered):
    if centered:
        return np.rint(y / spacing).astype(np.int64) - kmax
    return np.full(y.shape, -kmax, dtype=np.int64)


# -- sum_k sinc^2(y - k*spacing) ------------------------------------------------


@njit(cache=True)
def _sinc2_train_loops(y, spacing, kmax, starts):
    out = np.empty(y.size)
    width = 2 * kmax + 1
    for i in range(y.size):
        yi = y[i]
        s = math.sin(math.pi * yi)
        s2 = s * s
        acc = 0.0
        for q in range(width):
            d = yi - (starts[i] + q) * spacing
            if abs(d) < 1e-6:
                if d == 0.0:
                    acc += 1.0
                else:
                    v = math.sin(math.pi * d) / (math.pi * d)
                    acc += v * v
            else:
                acc += s2 / (math.pi * math.pi * d * d)
        out[i] = acc
    return out


def _sinc2_train_numpy(y, spacing, kmax, starts):
    out = np.empty(y.size)
    width = 2 * kmax + 1
    step = max(1, _CHUNK // width)
    k = np.arange(width)
    for a in range(0, y.size, step):
        b = min(y.size, a + step)
        d = y[a:b, None] - (starts[a:b, None] + k[None, :]) * spacing
        out[a:b] = np.sum(np.sinc(d) ** 2, axis=1)
    return out


def sinc2_train(y, spacing=1, kmax=2048, centered=True):
    """Truncated ``sum_k sinc^2(y - k*spacing)`` for integer ``spacing``.

    With ``centered`` the 2*kmax+1 terms are taken around the dominant term,
    otherwise ``|k| <= kmax``.
    """
    y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
    starts = _window_starts(y, spacing, kmax, centered)
    if USE_NUMBA:
        return _sinc2_train_loops(y, int(spacing), int(kmax), starts)
    return _sinc2_train_numpy(y, int(spacing), int(kmax), starts)


# -- sum_k (-1)^(k*alt) sinc(y - k*spacing) ------------------------------------------


@njit(cache=True)
def _sinc_train_loops(y, spacing, alt, kmax, starts):
    out = np.empty(y.size)
    width = 2 * kmax + 1
    parity = (spacing + alt) % 2
    for i in range(y.size):
        yi = y[i]
        s = math.sin(math.pi * yi) / math.pi
        acc = 0.0
        for q in range(width):
            k = starts[i] + q
            d = yi - k * spacing
            if abs(d) < 1e-6:
                v = 1.0 if d == 0.0 else math.sin(math.pi * d) / (math.pi * d)
                if (k * alt) % 2:
                    v = -v
                acc += v
            else:
                v = s / d
                if parity and k % 2:
                    v = -v
                acc += v
        out[i] = acc
    return out


def _sinc_train_numpy(y, spacing, alt, kmax, starts):
    out = np.empty(y.size)
    width = 2 * kmax + 1
    step = max(1, _CHUNK // width)
    q = np.arange(width)
    for a in range(0, y.size, step):
        b = min(y.size, a + step)
        k = starts[a:b, None] + q[None, :]
        sign = np.where((k * alt) % 2 == 1, -1.0, 1.0)
        out[a:b] = np.sum(sign * np.sinc(y[a:b, None] - k * spacing), axis=1)
    return out


def sinc_train(y, spacing, alt, kmax=2048, centered=True):
    """Truncated ``sum_k (-1)^(k*alt) sinc(y - k*spacing)`` for integer ``spacing``."""
    y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
    starts = _window_starts(y, spacing, kmax, centered)
    if USE_NUMBA:
        return _sinc_train_loops(y, int(spacing), int(alt), int(kmax), starts)
    return _sinc_train_numpy(y, int(spacing), int(alt), int(kmax), starts)


# -- Gaussian-approximation message passing on a regular sparse factor graph ---------------
#
# Observation d couples the P symbols cols[d, :] with gains h[d, :]. Symbol c
# appears in observation inv[c, q] at slot q. msg[d, q, :] is the distribution
# symbol cols[d, q] sends to observation d.


@njit(cache=True)
def _mp_loops(y, cols, h, inv, points, noise_var, max_iters, damping, tol):
    D, P = cols.shape
    A = points.size
    msg = np.full((D, P, A), 1.0 / A)
    post = np.full((D, A), 1.0 / A)
    ll = np.empty((D, P, A))
    LL = np.empty((D, A))
    mean = np.empty((D, P), dtype=np.complex128)
    var = np.empty((D, P))
    p2 = np.abs(points) ** 2
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        for d in range(D):
            for q in range(P):
                e = 0j
                s = 0.0
                for a in range(A):
                    e += msg[d, q, a] * points[a]
                    s += msg[d, q, a] * p2[a]
                mean[d, q] = e
                var[d, q] = max(s - (e.real * e.real + e.imag * e.imag), 0.0)
        for d in range(D):
            mt = 0j
            vt = noise_var
            for q in range(P):
                mt += h[d, q] * mean[d, q]
                g = h[d, q]
                vt += (g.real * g.real + g.imag * g.imag) * var[d, q]
            for q in range(P):
                g = h[d, q]
                mu = mt - g * mean[d, q]
                v = vt - (g.real * g.real + g.imag * g.imag) * var[d, q]
                if v < 1e-12:
                    v = 1e-12
                for a in range(A):
                    r = y[d] - mu - g * points[a]
                    ll[d, q, a] = -(r.real * r.real + r.imag * r.imag) / v
        for c in range(D):
            for a in range(A):
                acc = 0.0
                for q in range(P):
                    acc += ll[inv[c, q], q, a]
                LL[c, a] = acc
        change = 0.0
        for c in range(D):
            top = LL[c, 0]
            for a in range(1, A):
                top = max(top, LL[c, a])
            z = 0.0
            for a in range(A):
                z += math.exp(LL[c, a] - top)
            for a in range(A):
                pa = math.exp(LL[c, a] - top) / z
                change = max(change, abs(pa - post[c, a]))
                post[c, a] = pa
        for d in range(D):
            for q in range(P):
                c = cols[d, q]
                top = -1e300
                for a in range(A):
                    top = max(top, LL[c, a] - ll[d, q, a])
                z = 0.0
                for a in range(A):
                    z += math.exp(LL[c, a] - ll[d, q, a] - top)
                for a in range(A):
                    new = math.exp(LL[c, a] - ll[d, q, a] - top) / z
                    msg[d, q, a] = damping * new + (1.0 - damping) * msg[d, q, a]
        if change < tol:
            break
    return post, iters


def _softmax(x):
    x = x - x.max(axis=-1, keepdims=True)
    e = np.exp(x)
    return e / e.sum(axis=-1, keepdims=True)


def _mp_numpy(y, cols, h, inv, points, noise_var, max_iters, damping, tol):
    D, P = cols.shape
    A = points.size
    msg = np.full((D, P, A), 1.0 / A)
    post = np.full((D, A), 1.0 / A)
    p2 = np.abs(points) ** 2
    h2 = np.abs(h) ** 2
    q_idx = np.arange(P)[None, :]
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        mean = msg @ points
        var = np.maximum(msg @ p2 - np.abs(mean) ** 2, 0.0)
        mu = (h * mean).sum(axis=1, keepdims=True) - h * mean
        v = np.maximum(noise_var + (h2 * var).sum(axis=1, keepdims=True) - h2 * var, 1e-12)
        r = y[:, None, None] - mu[:, :, None] - h[:, :, None] * points[None, None, :]
        ll = -np.abs(r) ** 2 / v[:, :, None]
        LL = ll[inv, q_idx].sum(axis=1)
        new_post = _softmax(LL)
        change = np.abs(new_post - post).max()
        post = new_post
        msg = damping * _softmax(LL[cols] - ll) + (1.0 - damping) * msg
        if change < tol:
            break
    return post, iters


def mp_posteriors(y, cols, h, inv, points, noise_var, max_iters=30, damping=0.6, tol=1e-4):
    args = (
        np.ascontiguousarray(y, dtype=np.complex128),
        np.ascontiguousarray(cols, dtype=np.int64),
        np.ascontiguousarray(h, dtype=np.complex128),
        np.ascontiguousarray(inv, dtype=np.int64),
        np.ascontiguousarray(points, dtype=np.complex128),
        float(noise_var),
        int(max_iters),
        float(damping),
        float(tol),
    )
    if USE_NUMBA:
        return _mp_loops(*args)
    return _mp_numpy(*args)
