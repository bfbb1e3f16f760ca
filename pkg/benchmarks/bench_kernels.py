"""Time the numba kernels against their pure-numpy twins.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]
"""

import argparse
import time

import numpy as np

from diffsearch import _kernels
from diffsearch.scenarios import random_spec
from diffsearch.spectrum import build_diffusion


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compile for numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    cases = []
    for n in (16, 64, 256):
        spec = random_spec(rng, n, seed=args.seed)
        D, eig = build_diffusion(spec)
        poles = np.sort(eig.phases)
        w = np.abs(eig.target_amplitudes) ** 2
        w = w[np.argsort(eig.phases)]
        s = spec.source_state()
        phase = complex(np.exp(1j * 1.0))
        q = 2000
        cases.append((f"secular_bisect N={n}",
                      lambda p=poles, w=w: _kernels.secular_bisect_numba(p, w, 0.3, 1e-12),
                      lambda p=poles, w=w: _kernels.secular_bisect_numpy(p, w, 0.3, 1e-12)))
        cases.append((f"search_curve N={n} q={q}",
                      lambda d=D.matrix, s=s: _kernels.search_curve_numba(d, 0, phase, s.copy(), q),
                      lambda d=D.matrix, s=s: _kernels.search_curve_numpy(d, 0, phase, s.copy(), q)))
        cases.append((f"reflect_pair N={n} k=2000",
                      lambda s=s: _kernels.reflect_pair_numba(s, 0, s.copy(), 2000),
                      lambda s=s: _kernels.reflect_pair_numpy(s, 0, s.copy(), 2000)))

    print(f"{'kernel':<32}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fast, slow in cases:
        a, b = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<32}{a:>12.5f}{b:>12.5f}{b / a:>10.2f}")


if __name__ == "__main__":
    main()
