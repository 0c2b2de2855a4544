"""Benchmark: compiled kernels vs the pure-Python fallback.

Micro-benchmarks call both kernel implementations directly on the shapes the
simulator actually uses (32x32 products, 16x16 gram eigensolves). The macro
benchmark evolves one full sequence twice in subprocesses, once with
QDDLAB_PURE_PYTHON=1 and once with the compiled extension.

Run:  python benchmarks/bench_kernels.py [--fast]
"""
import argparse
import os
import subprocess
import sys
import time

from qddlab.kernels import pure
from qddlab.model import _splitmix64_stream
from qddlab.precision import PrecisionContext

try:
    from qddlab.kernels import _fast
except ImportError:
    _fast = None


def rand_flat(ctx, count, seed):
    stream = _splitmix64_stream(seed)
    return tuple(ctx.cplx(2 * next(stream) - 1, 2 * next(stream) - 1)
                 for _ in range(count))


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def micro(repeat):
    print(f"{'benchmark':<34}{'pure':>10}{'compiled':>10}{'speedup':>9}")
    for digits, backend in ((15, "double"), (30, "mp"), (74, "mp"), (110, "mp")):
        ctx = PrecisionContext(digits, backend)
        ctx.activate()
        a = rand_flat(ctx, 32 * 32, 1)
        b = rand_flat(ctx, 32 * 32, 2)
        t_pure = timeit(pure.matmul, a, b, 32, 32, 32, repeat=repeat)
        if _fast:
            t_fast = timeit(_fast.matmul, a, b, 32, 32, 32, repeat=repeat)
            ratio = f"{t_pure / t_fast:8.2f}x"
        else:
            t_fast, ratio = float("nan"), "     n/a"
        print(f"{'matmul 32x32 @' + str(digits) + 'd':<34}"
              f"{t_pure * 1e3:9.2f}m{t_fast * 1e3:9.2f}m{ratio}")

    for digits in (30, 110):
        ctx = PrecisionContext(digits)
        ctx.activate()
        n = 16
        base = list(rand_flat(ctx, n * n, 3))
        c = ctx.real("0.8")
        s = ctx.cplx("0.48", "0.36")
        sbar = s.conjugate()

        def rotations(impl, work):
            for p in range(n):
                for q in range(p + 1, n):
                    impl.rot_cols(work, n, n, p, q, c, s, sbar)
                    impl.rot_rows(work, n, p, q, c, s, sbar)

        t_pure = timeit(lambda: rotations(pure, list(base)), repeat=repeat)
        if _fast:
            t_fast = timeit(lambda: rotations(_fast, list(base)), repeat=repeat)
            ratio = f"{t_pure / t_fast:8.2f}x"
        else:
            t_fast, ratio = float("nan"), "     n/a"
        print(f"{'jacobi sweep 16x16 @' + str(digits) + 'd':<34}"
              f"{t_pure * 1e3:9.2f}m{t_fast * 1e3:9.2f}m{ratio}")


_MACRO_SNIPPET = """
import time
from qddlab.kernels import BACKEND
from qddlab.model import assemble, sample_bath
from qddlab.precision import PrecisionContext
from qddlab.evolve import run
from qddlab.metrics import single_axis_error, distance_to_identity
from qddlab.sequence import compile_spec, qdd

ctx = PrecisionContext({digits})
model = assemble(sample_bath(7), 1e-4, 1e-6, ctx)
t0 = time.perf_counter()
res = run(model, compile_spec(qdd(3, 3)), 1.0, with_checkpoints=False)
for mu in "xyz":
    single_axis_error(res.u_final, mu)
distance_to_identity(res.u_final)
print(f"{{BACKEND}}: {{time.perf_counter() - t0:.2f}} s")
"""


def macro(digits):
    print(f"\nfull QDD(3,3) evolution + error measures at {digits} digits:")
    for env_value in ("1", "0"):
        env = dict(os.environ, QDDLAB_PURE_PYTHON=env_value)
        out = subprocess.run([sys.executable, "-c",
                              _MACRO_SNIPPET.format(digits=digits)],
                             env=env, capture_output=True, text=True)
        sys.stdout.write(out.stdout or out.stderr)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--fast", action="store_true",
                        help="fewer repeats, skip the macro benchmark")
    args = parser.parse_args()
    if _fast is None:
        print("note: compiled kernels unavailable; showing pure timings only")
    micro(repeat=2 if args.fast else 5)
    if not args.fast:
        macro(digits=74)


if __name__ == "__main__":
    main()
