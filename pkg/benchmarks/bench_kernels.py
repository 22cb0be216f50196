"""Time the numba kernels against their numpy fallbacks on identical inputs.

Run: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from oddm import kernels
from oddm._accel import HAVE_NUMBA
from oddm.channel import DdChannel
from oddm.detection import effective_channel
from oddm.params import QPSK_POINTS, OddmParams


def sinc2_case():
    y = np.linspace(-200.0, 200.0, 4000)
    starts = kernels._window_starts(y, 1, 1000, True)
    return dict(
        numba=lambda: kernels._sinc2_train_loops(y, 1, 1000, starts),
        numpy=lambda: kernels._sinc2_train_numpy(y, 1, 1000, starts),
    )


def sinc_case():
    y = np.linspace(-3000.0, 3000.0, 4000)
    starts = kernels._window_starts(y, 16, 1000, True)
    return dict(
        numba=lambda: kernels._sinc_train_loops(y, 16, 15, 1000, starts),
        numpy=lambda: kernels._sinc_train_numpy(y, 16, 15, 1000, starts),
    )


def mp_case():
    p = OddmParams.desk(Lcp=4)
    ch = DdChannel.on_grid(p, [(0.6, 0, 0), (0.5j, 1, 1), (-0.45, 2, -1), (0.4, 3, 2)])
    cols, h, inv = effective_channel(ch, p).sparse_rows()
    rng = np.random.default_rng(0)
    x = QPSK_POINTS[rng.integers(0, 4, cols.shape[0])]
    y = (h * x[cols]).sum(axis=1) + 0.1 * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    args = (y, cols, h, inv, QPSK_POINTS, 0.02, 30, 0.6, 0.0)  # tol 0 forces all iterations
    return dict(numba=lambda: kernels._mp_loops(*args), numpy=lambda: kernels._mp_numpy(*args))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<12}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, make in (("sinc2_train", sinc2_case), ("sinc_train", sinc_case), ("mp", mp_case)):
        fns = make()
        if HAVE_NUMBA:
            fns["numba"]()  # compile outside the timed region
        best = {k: min(timeit.repeat(f, number=1, repeat=args.repeat)) * 1e3 for k, f in fns.items()}
        print(f"{name:<12}{best['numba']:>12.2f}{best['numpy']:>12.2f}{best['numpy'] / best['numba']:>10.1f}")


if __name__ == "__main__":
    main()
