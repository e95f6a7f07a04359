"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 10 30 60]

Reports the best wall time per call for each backend and the speed-up.
Both backends must return identical results; the script aborts otherwise.
"""

import argparse
import sys
import timeit

import numpy as np

from udtransfer import kernels
from udtransfer.synthetic import make_treebank, make_vocab


def mst_case(n, seed=0):
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(n + 1, n + 1))
    S[:, 0] = -np.inf
    return S


def bench(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 30, 60, 120])
    args = ap.parse_args(argv)

    if "cython" not in kernels.BACKENDS:
        print("compiled extension not built; only the Python backend is available",
              file=sys.stderr)
    backends = kernels.BACKENDS

    print("kernel\tsize\t" + "\t".join(f"{name}_ms" for name in backends) + "\tspeedup")
    for n in args.sizes:
        S = mst_case(n)
        outs = [impl.mst(S).tolist() for impl in backends.values()]
        if any(o != outs[0] for o in outs):
            sys.exit(f"backends disagree on mst at n={n}")
        number = max(1, 2000 // (n * n))
        times = [bench(lambda impl=impl: impl.mst(S), args.repeat, number)
                 for impl in backends.values()]
        print(_row("mst", n, times))

    vocab = make_vocab()
    entries = vocab.entries
    words = [w for s in make_treebank(300, seed=1) for w in s.forms]
    outs = [[impl.wordpiece(w, entries, vocab.unk_token) for w in words]
            for impl in backends.values()]
    if any(o != outs[0] for o in outs):
        sys.exit("backends disagree on wordpiece")

    def run(impl):
        for w in words:
            impl.wordpiece(w, entries, vocab.unk_token)

    times = [bench(lambda impl=impl: run(impl), args.repeat, 3) for impl in backends.values()]
    print(_row("wordpiece", len(words), times))


def _row(kernel, size, times):
    speedup = times[0] / times[-1] if len(times) > 1 else 1.0
    return f"{kernel}\t{size}\t" + "\t".join(f"{1e3 * t:.3f}" for t in times) + f"\t{speedup:.1f}x"


if __name__ == "__main__":
    main()
