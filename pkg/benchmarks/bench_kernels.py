"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times one ballot scan per instance size and full lazy-equilibrium
enumerations, and checks that both backends return identical results.
"""

import argparse
import random
import time

from approvalpne import kernels
from approvalpne.equilibrium import enumerate_equilibria
from approvalpne.generate import ExperimentConfig, generate_instance
from approvalpne.rules import standard_av
from approvalpne.strategy import BallotScanner


def _scan_args(m, seed):
    config = ExperimentConfig(m=(m, m), n=(4, 4), k=(min(3, m), min(3, m)))
    instance = generate_instance(config, seed)
    scanner = BallotScanner(instance, standard_av(), cap=m)
    rng = random.Random(seed)
    counts = [rng.randint(0, instance.n - 1) for _ in range(m)]
    util, owa, pref, _ = scanner._voters[0]
    return (counts, scanner.weights, scanner.prio_rank, instance.k, util, owa, pref, m)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def bench_scan(repeat):
    print(f"{'m':>3} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for m in (6, 8, 10, 12, 14):
        args = _scan_args(m, seed=m)
        tp, rp = best_of(lambda: kernels.pure.scan_ballots(*args), repeat)
        tc, rc = best_of(lambda: kernels.compiled.scan_ballots(*args), repeat)
        assert list(rp) == list(rc), f"backends disagree at m={m}"
        print(f"{m:>3} {tp * 1e3:>10.2f} {tc * 1e3:>10.3f} {tp / tc:>7.1f}x")


def bench_enumeration(repeat):
    rule = standard_av()
    for m, n, k in ((4, 3, 2), (5, 4, 2)):
        config = ExperimentConfig(m=(m, m), n=(n, n), k=(k, k), owa_scheme="additive")
        instance = generate_instance(config, 7)
        results = {}
        for name, module in (("python", kernels.pure), ("cython", kernels.compiled)):
            saved, kernels.active = kernels.active, module
            try:
                t, res = best_of(lambda: enumerate_equilibria(instance, rule, "lazy"), repeat)
            finally:
                kernels.active = saved
            results[name] = (t, res)
        assert results["python"][1].certificates == results["cython"][1].certificates
        tp, tc = results["python"][0], results["cython"][0]
        print(
            f"lazy enumeration m={m} n={n} k={k} ({2 ** (m * n)} profiles): "
            f"python {tp * 1e3:.1f}ms, cython {tc * 1e3:.2f}ms, {tp / tc:.1f}x"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    bench_scan(args.repeat)
    bench_enumeration(args.repeat)


if __name__ == "__main__":
    main()
