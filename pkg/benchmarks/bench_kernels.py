"""Benchmark of the numba kernels against the pure-numpy lane.

Runs the three hot kernels (boundary forward, boundary backward, interior
field evaluation) at a few problem sizes and prints a timing table plus the
speedup.  The numba lane is warmed up before timing so compilation is not
counted.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from hergnet import _kernels_numpy as knp

try:
    from hergnet import _kernels_numba as knb
except ImportError:
    knb = None

SIZES = [(1000, 1000), (10000, 1000), (50000, 2000)]


def make_instance(n, Q, D=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, D)) * 2.0
    z = rng.uniform(-1, 1, Q)
    st = np.sqrt(1 - z * z)
    phi = rng.uniform(0, 2 * np.pi, Q)
    S = np.ascontiguousarray(np.stack([st * np.cos(phi), st * np.sin(phi), z], axis=1))
    d = rng.uniform(-1, 1, Q)
    face = rng.integers(0, 2 * D, n)
    wtab = rng.normal(size=(2 * D, Q)) + 1j * rng.normal(size=(2 * D, Q))
    h = rng.normal(size=Q) + 1j * rng.normal(size=Q)
    return dict(X=X, S=S, d=d, k=9.16, face=face, wtab=wtab, hw=wtab * h,
                h=h, rsrc=np.zeros(n, dtype=complex),
                wadj=rng.normal(size=n) + 1j * rng.normal(size=n),
                naxis=rng.integers(0, D, n),
                nsign=np.where(rng.random(n) < 0.5, -1.0, 1.0))


def run_forward(mod, inst):
    return mod.boundary_forward(inst["X"], inst["S"], inst["d"], inst["k"],
                                inst["face"], inst["hw"], inst["rsrc"],
                                store_E=False)


def run_backward(mod, inst):
    return mod.boundary_backward(inst["X"], inst["S"], inst["d"], inst["k"],
                                 inst["face"], inst["wtab"], inst["naxis"],
                                 inst["nsign"], inst["wadj"], None)


def run_field(mod, inst):
    return mod.field_eval(inst["X"], inst["S"], inst["d"], inst["h"], inst["k"])


KERNELS = [("forward", run_forward), ("backward", run_backward),
           ("field", run_field)]


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if knb is None:
        print("numba not installed: only the numpy lane is timed")
    print(f"{'kernel':<10} {'n_pts':>7} {'n_dir':>6} {'numpy':>10} "
          f"{'numba':>10} {'speedup':>8}")
    for n, Q in SIZES:
        inst = make_instance(n, Q)
        for name, fn in KERNELS:
            t_np = best_of(lambda: fn(knp, inst), args.repeats)
            if knb is not None:
                fn(knb, inst)  # warm up the jit
                t_nb = best_of(lambda: fn(knb, inst), args.repeats)
                print(f"{name:<10} {n:>7} {Q:>6} {t_np * 1e3:>8.1f}ms "
                      f"{t_nb * 1e3:>8.1f}ms {t_np / t_nb:>7.2f}x")
            else:
                print(f"{name:<10} {n:>7} {Q:>6} {t_np * 1e3:>8.1f}ms "
                      f"{'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
