"""Compare the numba kernels against the pure numpy/Python fallback.

    python benchmarks/bench_backends.py [--k 100000] [--repeat 3]

Times the per-dimension search and the arithmetic coder on each backend and
checks that both produce identical outputs.
"""
import argparse
import time

import numpy as np

from vbq import NUMBA_AVAILABLE, use_backend
from vbq.analysis import SyntheticSource
from vbq.codec import ac_decode, ac_encode, build_frequency_table
from vbq.core import RdConfig, quantize_arrays
from vbq.prior import StandardNormal


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=100_000)
    ap.add_argument("--lam", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    mu, s2 = SyntheticSource(args.seed, args.k).posteriors()
    prior = StandardNormal()
    cfg = RdConfig(args.lam)
    backends = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]
    results = {}
    for be in backends:
        with use_backend(be):
            quantize_arrays(mu[:10], s2[:10], prior, cfg)  # warm-up / jit load
            t_q, q = best_of(lambda: quantize_arrays(mu, s2, prior, cfg), args.repeat)
            pts = q.code_points
            table = build_frequency_table(pts)
            ac_decode(ac_encode(pts[:10], table), table, 10)
            t_e, bits = best_of(lambda: ac_encode(pts, table), args.repeat)
            t_d, back = best_of(lambda: ac_decode(bits, table, len(pts)), args.repeat)
        assert back == pts
        results[be] = (q, bits)
        print(f"{be:>6}: search {t_q * 1e3:9.2f} ms  ({args.k / t_q / 1e6:6.2f} Mdim/s)  "
              f"ac_encode {t_e * 1e3:9.2f} ms  ac_decode {t_d * 1e3:9.2f} ms  "
              f"payload {len(bits)} bits")
    if len(results) == 2:
        (qa, ba), (qb, bb) = results["numba"], results["numpy"]
        same = (np.array_equal(qa.numerators, qb.numerators) and np.array_equal(qa.rates, qb.rates)
                and np.array_equal(qa.reconstruction, qb.reconstruction) and ba == bb)
        print(f"outputs identical across backends: {same}")


if __name__ == "__main__":
    main()
