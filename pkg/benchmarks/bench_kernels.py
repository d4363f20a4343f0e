"""Compare the numba and numpy grid kernels.

    python3 benchmarks/bench_kernels.py [--sizes 65 129 257] [--repeat 5]

For each grid size it checks that both backends agree, then reports the
best-of-``repeat`` wall time per kernel and the speed-up.  The first numba
call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from gammafrac import kernels
from gammafrac.material import ElasticTensor


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    h = 1.0 / (n - 1)
    ux, uy = rng.standard_normal((2, n, n))
    v = rng.uniform(0.05, 1.0, (n, n))
    pinned = np.zeros((n, n), dtype=bool)
    pinned[0], pinned[-1], pinned[:, 0], pinned[:, -1] = True, True, True, True
    v[pinned] = 1.0
    B = kernels.b_matrices(h)
    D = ElasticTensor.isotropic(1.0, 0.5).mandel
    BDB = 0.25 * h * h * np.einsum("gia,ij,gjb->gab", B, D, B)
    return h, ux, uy, v, pinned, BDB


def _cases(n):
    h, ux, uy, v, pinned, BDB = _inputs(n)
    vg = kernels.gauss_values(v)
    return {
        "gauss_strains": lambda: kernels.gauss_strains(ux, uy, h),
        "gauss_values": lambda: kernels.gauss_values(v),
        "element_stiffness": lambda: kernels.element_stiffness(vg, BDB),
        "lipschitz_restore": lambda: kernels.lipschitz_restore(v, 4.0 * h, pinned),
    }


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def run(sizes, repeat):
    rows = []
    for n in sizes:
        results = {}
        for name in ("numpy", "numba"):
            prev = kernels.use_backend(name)
            try:
                cases = _cases(n)
                out = {k: f() for k, f in cases.items()}  # warm-up / compile
                times = {k: _best(f, repeat) for k, f in cases.items()}
            finally:
                kernels.use_backend(prev)
            results[name] = (out, times)
        for k in results["numpy"][1]:
            a, b = results["numpy"][0][k], results["numba"][0][k]
            diff = float(np.max(np.abs(a - b)))
            tn, tb = results["numpy"][1][k], results["numba"][1][k]
            rows.append((n, k, tn, tb, tn / tb, diff))
    return rows


def solve_times(n=65, repeat=2):
    """Wall time of a full alternating minimization (discontinuous tension datum)."""
    from gammafrac import potentials, solver
    from gammafrac.material import DamageLaw

    A, law, F = ElasticTensor.scaled_identity(1.0), DamageLaw.quadratic(1.0), potentials.zero()
    grid = solver.Grid.square(n)

    def f(p):
        return np.stack([np.where(p[..., 0] >= 0.5, 1.0, 0.0), np.zeros(p.shape[:-1])], axis=-1)

    out = {}
    for name in ("numpy", "numba"):
        prev = kernels.use_backend(name)
        try:
            def job():
                st = solver.initial_state(grid, f, 4 * grid.h, A, law, F)
                return solver.alternate_minimize(st, A, law, F).trace[-1].F_eps
            energy = job()
            out[name] = (_best(job, repeat), energy)
        finally:
            kernels.use_backend(prev)
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[65, 129, 257])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    print(f"{'n':>5} {'kernel':<18} {'numpy [ms]':>11} {'numba [ms]':>11} {'speed-up':>9} {'max diff':>10}")
    for n, k, tn, tb, s, d in run(args.sizes, args.repeat):
        print(f"{n:>5} {k:<18} {1e3 * tn:>11.3f} {1e3 * tb:>11.3f} {s:>9.1f} {d:>10.2e}")
    t = solve_times()
    (tn, en), (tb, eb) = t["numpy"], t["numba"]
    print(f"\nfull solve on 65x65: numpy {tn:.2f} s, numba {tb:.2f} s, "
          f"speed-up {tn / tb:.2f}, energy difference {abs(en - eb):.2e}")


if __name__ == "__main__":
    main()
