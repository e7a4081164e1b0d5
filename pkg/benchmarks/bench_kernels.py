#!/usr/bin/env python3
"""Compare the compiled and numpy pooling kernels, end to end and in isolation.

Usage: python benchmarks/bench_kernels.py [--repeats 30]

The pooling kernels run once per batch in both the forward and backward
pass, on (batch * channels, frames) row blocks; the sizes below mirror the
training configurations used in the acceptance experiments.
"""
import argparse
import time

import numpy as np

from trajlift import kernels
from trajlift.kernels import _pool_py


def _time(fn, *args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pooling(repeats):
    print(f"active backend: {kernels.active_backend()}")
    print(f"{'rows x frames':>16} {'window':>6} {'numpy fwd':>11} "
          f"{'compiled fwd':>13} {'speedup':>8} {'numpy bwd':>11} "
          f"{'compiled bwd':>13} {'speedup':>8}")
    shapes = [(6400, 25), (25600, 25), (12800, 50), (3200, 100)]
    rng = np.random.default_rng(0)
    for rows, frames in shapes:
        x = rng.normal(size=(rows, frames))
        window = 5
        t_py_f = _time(_pool_py.avg_pool_forward, x, window, repeats=repeats)
        t_py_b = _time(_pool_py.avg_pool_backward, x, window, repeats=repeats)
        if kernels.active_backend() == "compiled":
            t_c_f = _time(kernels.avg_pool_forward, x, window, repeats=repeats)
            t_c_b = _time(kernels.avg_pool_backward, x, window, repeats=repeats)
            print(f"{rows:>10}x{frames:<5} {window:>6} {t_py_f*1e3:>9.2f}ms "
                  f"{t_c_f*1e3:>11.2f}ms {t_py_f/t_c_f:>7.1f}x "
                  f"{t_py_b*1e3:>9.2f}ms {t_c_b*1e3:>11.2f}ms "
                  f"{t_py_b/t_c_b:>7.1f}x")
        else:
            print(f"{rows:>10}x{frames:<5} {window:>6} {t_py_f*1e3:>9.2f}ms "
                  f"{'n/a':>13} {'':>8} {t_py_b*1e3:>9.2f}ms {'n/a':>13}")


def bench_training_step(repeats):
    """One forward+backward on a realistic batch, per backend."""
    from trajlift.bases import dct_basis
    from trajlift.network import NetworkConfig, backward, forward, init_network

    cfg = NetworkConfig(frames=25, num_bases=5, joints=17,
                        feat_width=64, feat_dropout=0.0,
                        reg_width=256, reg_dropout=0.0, seed=0)
    params = init_network(cfg)
    basis = dct_basis(25, 5)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(100, 25, 34)) * 0.3
    gt = rng.normal(size=(100, 25, 51))

    def step():
        result = forward(params, basis, x)
        backward(params, result.cache, gt)

    t = _time(step, repeats=max(3, repeats // 5))
    print(f"\nforward+backward, batch 100 (backend={kernels.active_backend()}):"
          f" {t*1e3:.1f} ms")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()
    bench_pooling(args.repeats)
    bench_training_step(args.repeats)


if __name__ == "__main__":
    main()
