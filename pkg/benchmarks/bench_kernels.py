"""Compare the compiled and pure-Python neighbour-sampling kernels.

Usage: python benchmarks/bench_kernels.py [--repeat 3]

Times one batch of draws per graph size on each backend (the outputs are
checked to be identical), then one full KES run on Trap data.
"""

import argparse
import time

import numpy as np

from kesbn import kernels
from kesbn.data import trap_dataset
from kesbn.graph import Dag
from kesbn.search import SearchConfig, batch_size, run_kes


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def random_dag(rng, n, p):
    perm = rng.permutation(n)
    return Dag(n, [(int(perm[i]), int(perm[j])) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels._ext is None:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .`")

    rng = np.random.default_rng(0)
    print(f"{'nodes':>5} {'draws':>6} {'compiled ms':>12} {'python ms':>10} {'speedup':>8}")
    for n in (4, 8, 12, 20, 40, 64):
        g = random_dag(rng, n, 2.0 / n)
        m = batch_size(1.0, 20, n)
        u = rng.random(kernels.uniforms_needed(n, m, 1))
        tc, a = best_of(lambda: kernels.sample_batch(g.parent_masks, u, n, m, 1, backend="compiled"), args.repeat)
        tp, b = best_of(lambda: kernels.sample_batch(g.parent_masks, u, n, m, 1, backend="python"), args.repeat)
        assert a == b, "backends disagree"
        print(f"{n:>5} {m:>6} {tc * 1e3:>12.2f} {tp * 1e3:>10.2f} {tp / tc:>7.1f}x")

    d = trap_dataset(3, 20000, 0)
    print("\nfull GES run (k=1) on Trap groups=3, N=20000:")
    for backend in ("compiled", "python"):
        t, r = best_of(lambda: run_kes(d, SearchConfig(k=1.0, seed=0, backend=backend)), 1)
        print(f"  {backend:>8}: {t:6.2f}s  score {r.score:.4f}  iterations {r.iterations}")


if __name__ == "__main__":
    main()
