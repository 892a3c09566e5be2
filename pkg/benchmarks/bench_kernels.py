"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 65536]

Both backends are imported directly, so the comparison does not depend on
NLOCAL_PURE_PYTHON. Results are checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from nlocal import _fallback
from nlocal.inequalities import star_patterns
from nlocal.states import random_state

try:
    from nlocal import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def unit(rng, shape):
    v = rng.normal(size=shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def cases(size, rng):
    chain_t = np.array([random_state(k).T for k in range(3)])
    yield "linear_lhs_batch n=3", "linear_lhs_batch", (chain_t, *(unit(rng, (size,)) for _ in range(4)))
    for n in (3, 5):
        star_t = np.array([random_state(10 + k).T for k in range(n)])
        pats = np.array(star_patterns(n), dtype=np.intc) - 1
        yield f"star_lhs_batch n={n}", "star_lhs_batch", (star_t, unit(rng, (size, n)), unit(rng, (size, n)), pats)
    sym = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    yield "jacobi_eigh 4x4", "jacobi_eigh", (sym + sym.conj().T,)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=65536, help="batch size for the functional kernels")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<22}{'fallback s':>12}{'compiled s':>12}{'speedup':>9}")
    for label, name, call_args in cases(args.size, rng):
        slow = getattr(_fallback, name)
        t_slow = best_of(lambda: slow(*call_args), args.repeat)
        if _kernels is None:
            print(f"{label:<22}{t_slow:>12.4g}{'-':>12}{'-':>9}")
            continue
        fast = getattr(_kernels, name)
        a, b = slow(*call_args)[0], fast(*call_args)[0]
        assert np.allclose(a, b, atol=1e-12), f"{label}: backends disagree"
        t_fast = best_of(lambda: fast(*call_args), args.repeat)
        print(f"{label:<22}{t_slow:>12.4g}{t_fast:>12.4g}{t_slow / t_fast:>9.2f}")


if __name__ == "__main__":
    main()
