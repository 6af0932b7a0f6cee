"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times one transport sweep, a full solve per solver, and growing one tree
on a synthetic grid-shaped dataset, and checks both backends return
identical results.
"""
import argparse
import timeit

import numpy as np

import slabselect.ml.tree as tree_mod
import slabselect.transport as transport
from slabselect._backend import available_backends
from slabselect.quadrature import gauss_legendre
from slabselect.transport import SlabProblem


def synthetic_dataset(n=4545, seed=1):
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        rng.choice([2, 4, 8, 16, 32], n),
        rng.choice(2 ** np.arange(2, 11), n),
        rng.integers(0, 101, n) / 100.0,
    ]).astype(float)
    y = np.where(X[:, 2] == 0, 2, np.where(X[:, 1] < 16, 0, 1))
    flip = rng.random(n) < 0.05
    y[flip] = rng.integers(0, 3, flip.sum())
    return X, y.astype(np.intp)


def bench(label, fn, repeat):
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return label, min(times)


def run(repeat):
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the fallback is available")
    problem = SlabProblem(scattering_ratio=0.9, num_cells=1024, sn_order=16)
    quad = gauss_legendre(problem.sn_order)
    mu, wt = np.ascontiguousarray(quad.nodes), np.ascontiguousarray(quad.weights)
    q = np.full(problem.num_cells, 3.0)
    X, y = synthetic_dataset()
    sample = np.random.default_rng(0).integers(0, len(y), len(y)).astype(np.intp)
    keys = np.random.default_rng(0).random((2 * len(y) - 1, 3))

    rows = {}
    outputs = {}
    for name, k in backends.items():
        phi = np.empty(problem.num_cells)
        psi = np.zeros((problem.num_cells + 1, problem.sn_order))

        def one_sweep():
            k.sweep(mu, wt, problem.dx, problem.sigma_t, q, phi, psi)

        def one_tree():
            return k.grow_tree(X, y, sample, 3, 1, 1, keys)

        rows.setdefault("sweep (1024 cells, S16)", {})[name] = bench("", one_sweep, repeat)[1]
        rows.setdefault("grow tree (4545 rows, mtry 1)", {})[name] = bench("", one_tree, repeat)[1]
        outputs.setdefault("tree", {})[name] = one_tree()

        saved = (transport.kernels, tree_mod.kernels)
        transport.kernels = tree_mod.kernels = k
        try:
            for solver in ("richardson", "dsa", "nda"):
                p = SlabProblem(scattering_ratio=0.9, num_cells=128, sn_order=8)
                rows.setdefault(f"solve {solver} (c=0.9, 128 cells, S8)", {})[name] = bench(
                    "", lambda: transport.solve(p, solver), max(1, repeat // 2))[1]
                outputs.setdefault(solver, {})[name] = transport.solve(p, solver).scalar_flux
        finally:
            transport.kernels, tree_mod.kernels = saved

    names = list(backends)
    header = f"{'kernel':<40}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, t in rows.items():
        line = f"{label:<40}" + "".join(f"{t[n] * 1e3:>10.3f}ms" for n in names)
        if len(names) == 2:
            line += f"{t['python'] / t['cython']:>9.1f}x"
        print(line)

    if len(names) == 2:
        same = all(
            all(np.array_equal(a, b) for a, b in zip(v["python"], v["cython"])) if key == "tree"
            else np.array_equal(v["python"], v["cython"])
            for key, v in outputs.items()
        )
        print("backends bit-identical:", same)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    run(ap.parse_args().repeat)


if __name__ == "__main__":
    main()
