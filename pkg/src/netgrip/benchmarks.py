"""Benchmark the numba kernels against the pure-numpy fallback."""

import time

import numpy as np

from .kernels import get_backend


def _setup(n_nodes, seed=0):
    rng = np.random.default_rng(seed)
    pos = rng.normal(0.0, 10.0, size=(n_nodes, 3))
    n_edges = 3 * n_nodes
    ea = rng.integers(0, n_nodes, size=n_edges).astype(np.int64)
    eb = (ea + 1 + rng.integers(0, n_nodes - 1, size=n_edges)).astype(np.int64) % n_nodes
    rest = rng.uniform(1.0, 5.0, size=n_edges)
    k = np.full(n_edges, 0.6)
    params = np.zeros(8)
    params[0] = 20.0
    return pos, ea, eb, rest, k, params


def _time(fn, repeats):
    fn()  # warm up (and JIT-compile for numba)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def run_benchmark(n_nodes=2000, repeats=50):
    pos, ea, eb, rest, k, params = _setup(n_nodes)
    print(f"nodes={n_nodes} edges={len(ea)} repeats={repeats}")
    results = {}
    for name in ("numpy", "numba"):
        try:
            backend = get_backend(name)
        except ImportError:
            print(f"{name:>6}: unavailable")
            continue
        t_spring = _time(
            lambda b=backend: b.spring_energy_grad(pos, ea, eb, rest, k, False), repeats
        )
        t_sdf = _time(
            lambda b=backend: b.sdf_batch(b.SHAPE_ELLIPSOID, np.array(
                [15.0, 20.0, 25.0, 0, 0, 0, 0, 0]), pos), repeats
        )
        results[name] = (t_spring, t_sdf)
        print(f"{name:>6}: spring {t_spring * 1e6:9.1f} us   ellipsoid sdf {t_sdf * 1e6:9.1f} us")
    if "numpy" in results and "numba" in results:
        s = results["numpy"][0] / results["numba"][0]
        d = results["numpy"][1] / results["numba"][1]
        print(f"speedup: spring x{s:.1f}, sdf x{d:.1f}")
    return results
