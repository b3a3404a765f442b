"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints per-call time of each kernel on both backends, then the wall time of a
short DQN training run and a multilateration sweep under each backend.
"""
import argparse
import timeit

import numpy as np

from drloc import kernels
from drloc.baselines import multilaterate
from drloc.dqn import DqnConfig, train
from drloc.env import Environment, Simulator, generate_trajectories
from drloc.grid import GridMap, gateway_grid_layout
from drloc.radio import NoiseModel, PathLossParams, model_rss


def kernel_cases(rng):
    rss = rng.uniform(-90, -40, 20)
    gw = rng.uniform(0, 100, (20, 2))
    q = rng.normal(size=9)
    mask = np.ones(9, dtype=bool)
    u = rng.random(299)
    true = np.array([37.0, 41.0])
    d = np.linalg.norm(gw - true, axis=1)
    return {
        "near_field": (rss, -64.0),
        "reward": (12.5, 17.5, rss, gw, -64.0, 10.0, 1.0),
        "masked_argmax": (q, mask),
        "random_walk(300)": (16, 28, 3, 4, u),
        "gauss_newton(20 gw)": (gw, d, 50.0, 50.0, 50, 1e-6, 1e-3, 1.0),
    }


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    backends = kernels.available_backends()
    print(f"{'kernel':24s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")
    for name, args in cases.items():
        fn_name = name.split("(")[0]
        times = []
        for b in backends:
            fn = getattr(kernels.get_module(b), fn_name)
            n = max(1, repeat // (100 if "walk" in name or "gauss" in name else 1))
            t = min(timeit.repeat(lambda: fn(*args), number=n, repeat=3)) / n
            times.append(t)
        sp = times[0] / times[-1] if len(times) == 2 else float("nan")
        print(f"{name:24s}" + "".join(f"{t * 1e6:12.2f}us" for t in times) + f"   {sp:6.1f}x")


def bench_end_to_end():
    grid = GridMap(8, 8, 5.0)
    gws = gateway_grid_layout(2, 2, 15.0, 15.0, (12.5, 12.5))
    sim = Simulator(gws, PathLossParams(), NoiseModel(4.0))
    data = generate_trajectories(grid, sim, 20, 100, seed=1)
    env = Environment(grid, gws)
    cfg = DqnConfig(replay_start=500, minibatch=200)
    big = gateway_grid_layout(4, 5, 30.0, 24.0, (10.0, 4.0))
    pts = np.random.default_rng(2).uniform([10, 4], [130, 76], (500, 2))
    vs = model_rss(pts, big, PathLossParams())
    prev = kernels.BACKEND
    for b in kernels.available_backends():
        kernels.use_backend(b)
        t_train = min(timeit.repeat(lambda: train(data, env, cfg, np.random.default_rng(0)), number=1, repeat=2))
        t_mlat = min(timeit.repeat(lambda: [multilaterate(v, big) for v in vs], number=1, repeat=3))
        print(f"{b:10s} train 2000 steps: {t_train:7.3f}s   500 fixes: {t_mlat * 1e3:8.2f}ms ({t_mlat / 500 * 1e6:.0f}us/fix)")
    kernels.use_backend(prev)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20000)
    args = ap.parse_args()
    print(f"default backend: {kernels.BACKEND}")
    bench_kernels(args.repeat)
    bench_end_to_end()


if __name__ == "__main__":
    main()
