"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--horizon 200] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from compsurv.kernels import available_backends


def make_inputs(n: int, horizon: int, p: int, seed: int):
    rng = np.random.default_rng(seed)
    time = rng.integers(0, horizon + 1, size=n).astype(float)
    event = rng.integers(0, 2, size=n)
    X = rng.normal(size=(n, p))
    ev = np.flatnonzero(event == 1)
    order = ev[np.argsort(time[ev], kind="stable")]
    counts = np.searchsorted(time[order], np.arange(horizon + 1), side="right")
    surv = np.sort(rng.random((n, horizon + 1)), axis=1)[:, ::-1].copy()
    return {
        "bayes_accumulate": (X[order], counts, 1e-6),
        "concordance_counts": (surv, time.astype(np.int64), time, event),
        "auc_counts": (rng.random(n), time, event, rng.uniform(1, 2, n), horizon / 2, False),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--p", type=int, default=9)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = available_backends()
    inputs = make_inputs(args.n, args.horizon, args.p, args.seed)
    print(f"n={args.n} horizon={args.horizon} p={args.p} backends={sorted(backends)}")
    print(f"{'kernel':<20}" + "".join(f"{b:>14}" for b in sorted(backends)) + f"{'speedup':>10}")
    for name, kargs in inputs.items():
        best = {}
        for bname, mod in sorted(backends.items()):
            fn = getattr(mod, name)
            fn(*kargs)  # warm up
            best[bname] = min(timeit.repeat(lambda: fn(*kargs), number=1, repeat=args.repeat))
        row = f"{name:<20}" + "".join(f"{best[b] * 1e3:>12.2f}ms" for b in sorted(best))
        if "cython" in best:
            row += f"{best['python'] / best['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
