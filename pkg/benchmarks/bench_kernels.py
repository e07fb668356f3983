"""Time the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Both implementations are
imported directly, so the result does not depend on BAYESLQR_PURE_PYTHON.
"""
import argparse
import timeit

import numpy as np

from bayeslqr import _pykernels

try:
    from bayeslqr import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    A = np.array([[1.0, 1.0], [-0.9, 0.9]])
    B = np.array([[0.0], [0.8]])
    Q = np.diag([5.0, 0.1])
    R = np.array([[0.1]])
    N = np.zeros((1, 2))
    Acl = np.array([[0.9, 0.2], [-0.1, 0.7]])
    W = 0.0625 * np.eye(2)
    T = 128
    U = rng.standard_normal((1, T))
    Wn = 0.25 * rng.standard_normal((2, T))
    x0 = rng.standard_normal(2)
    return {
        "dare_iterate (n=2)": lambda k: k.dare_iterate(A, B, Q, R, N, 1e-12, 100_000),
        "lyap_kron (n=2)": lambda k: k.lyap_kron(Acl, W),
        "simulate (T=128)": lambda k: k.simulate(A, B, x0, U, Wn),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args(argv)
    impls = {"python": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name in impls) + f"{'speedup':>10}")
    for label, fn in cases(np.random.default_rng(0)).items():
        best = {}
        for name, mod in impls.items():
            t = timeit.repeat(lambda: fn(mod), repeat=args.repeat, number=args.number)
            best[name] = min(t) / args.number * 1e6
        row = f"{label:<22}" + "".join(f"{best[n]:>11.2f} us" for n in impls)
        if "cython" in best:
            row += f"{best['python'] / best['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
