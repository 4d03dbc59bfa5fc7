"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N] [--check]

Also times one end-to-end exact reach with each backend, toggled through
IMAGESTAR_NO_NUMBA in a child process so module-level binding is honoured.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from imagestar import _kernels
from imagestar.lp import _phase_one


def simplex_case(rng, m=8, p=40):
    C = np.vstack([np.eye(m), -np.eye(m), rng.normal(size=(p, m))])
    d = np.concatenate([np.ones(2 * m), rng.uniform(0.5, 2.0, size=p)])
    T, basis, n_real = _phase_one(C, d)
    cost = np.zeros(n_real)
    cost[:m] = rng.normal(size=m)
    cost[m : 2 * m] = -cost[:m]
    T[-1, :n_real] = cost
    T[-1] -= cost[basis] @ T[:-1]
    return T, basis, n_real


def bench(name, fn_numba, fn_numpy, make_args, repeat):
    fn_numba(*make_args())  # compile outside the timing
    t_nb = min(timeit.repeat(lambda: fn_numba(*make_args()), number=1, repeat=repeat))
    t_np = min(timeit.repeat(lambda: fn_numpy(*make_args()), number=1, repeat=repeat))
    print(f"{name:<15} numba {t_nb * 1e3:9.3f} ms   numpy {t_np * 1e3:9.3f} ms   speedup {t_np / t_nb:6.1f}x")


REACH_SNIPPET = r"""
import time, numpy as np
from imagestar import *
rng = np.random.default_rng(0)
net = Network([Conv2dLayer(rng.normal(size=(3, 3, 1, 2)), [0.1, -0.1]), ReLULayer(),
               MaxPoolLayer((2, 2)), FCLayer(rng.normal(size=(3, 8)), np.zeros(3))], (6, 6, 1))
s = ImageStar.from_box(rng.uniform(-1, 1, (6, 6, 1)), rng.normal(scale=0.3, size=(6, 6, 1, 2)), [-1, -1], [1, 1])
reach(net, s, Scheme.EXACT)
t0 = time.perf_counter(); r = reach(net, s, Scheme.EXACT); t = time.perf_counter() - t0
print(f"{BACKEND} {t:.3f} {len(r.output_sets)} {r.stats.lp_calls}")
"""


def bench_reach():
    for flag in ("", "1"):
        env = {**os.environ, "IMAGESTAR_NO_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", REACH_SNIPPET], env=env, capture_output=True, text=True)
        if out.returncode:
            print(out.stderr)
            continue
        backend, t, n, calls = out.stdout.split()
        print(f"reach           {backend:<6} {float(t) * 1e3:9.1f} ms   {n} stars, {calls} LPs")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--check", action="store_true", help="also assert both backends agree")
    ap.add_argument("--no-reach", action="store_true")
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(0)

    T, basis, n_real = simplex_case(rng)

    def simplex_args():
        return T.copy(), basis.copy(), n_real, 1e-9, 1e-9, 50000

    bench("simplex", _kernels.simplex_numba, _kernels.simplex_numpy, simplex_args, args.repeat)

    # small: a verifier basis (batch = generators + 1); large: a concrete batch
    for tag, xs, ws in [("small", (8, 8, 1, 4), (3, 3, 1, 2)), ("large", (28, 28, 3, 64), (3, 3, 3, 8))]:
        X = np.ascontiguousarray(rng.normal(size=xs))
        W = np.ascontiguousarray(rng.normal(size=ws))
        bench(f"conv2d/{tag}", _kernels.conv2d_numba, _kernels.conv2d_numpy, lambda: (X, W, (1, 1), (1, 1)), args.repeat)
        bench(f"avgpool/{tag}", _kernels.avgpool_numba, _kernels.avgpool_numpy, lambda: (X, (2, 2), (2, 2)), args.repeat)
        bench(f"maxpool/{tag}", _kernels.maxpool_numba, _kernels.maxpool_numpy, lambda: (X, (2, 2), (2, 2)), args.repeat)

    if args.check:
        a, b = simplex_args(), simplex_args()
        assert _kernels.simplex_numba(*a) == _kernels.simplex_numpy(*b)
        assert np.allclose(a[0], b[0])
        assert np.allclose(_kernels.conv2d_numba(X, W, (1, 1), (1, 1)), _kernels.conv2d_numpy(X, W, (1, 1), (1, 1)))
        assert np.allclose(_kernels.avgpool_numba(X, (2, 2), (2, 2)), _kernels.avgpool_numpy(X, (2, 2), (2, 2)))
        assert np.array_equal(_kernels.maxpool_numba(X, (2, 2), (2, 2)), _kernels.maxpool_numpy(X, (2, 2), (2, 2)))
        print("backends agree")
    if not args.no_reach:
        bench_reach()
    return 0


if __name__ == "__main__":
    sys.exit(main())
