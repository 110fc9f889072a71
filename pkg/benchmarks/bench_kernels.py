"""Compare the compiled and pure-Python kernels.

Runs each kernel on synthetic rows with both backends, checks the outputs
agree, and prints the best-of-N time per backend. A second section times
full view evaluation on the generated university dataset under each backend.

    python benchmarks/bench_kernels.py [--rows 200000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import os
import random
import subprocess
import sys
import timeit

from viewkeeper import kernels


def make_rows(n: int, rng: random.Random) -> tuple[list, list]:
    left = [(i, rng.randrange(n // 10 or 1), f"s{i % 97}", rng.random()) for i in range(n)]
    right = [(k, f"d{k}", rng.randrange(5)) for k in range(n // 10 or 1)]
    return left, right


def cases(left, right):
    keys = kernels.python.key_set(right[::2], (0,))
    return {
        "key_set": lambda m: m.key_set(left, (1,)),
        "key_set/2": lambda m: m.key_set(left, (1, 2)),
        "project_distinct": lambda m: m.project_distinct(left, (1, 2)),
        "semijoin": lambda m: m.semijoin(left, (1,), keys),
        "hash_join": lambda m: m.hash_join(left, (1,), right, (0,)),
        "filter_equal": lambda m: m.filter_equal(left, ((0, 1),)),
    }


def bench_kernels(rows: int, repeat: int) -> None:
    left, right = make_rows(rows, random.Random(0))
    backends = [("python", kernels.python)]
    if kernels.compiled is not None:
        backends.append(("cython", kernels.compiled))
    else:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for name, fn in cases(left, right).items():
        results = [fn(m) for _, m in backends]
        if len(results) == 2:
            a, b = results
            same = sorted(a) == sorted(b) if isinstance(a, list) else a == b
            if not same:
                sys.exit(f"backend outputs differ for {name}")
        times = [min(timeit.repeat(lambda m=m: fn(m), number=1, repeat=repeat)) for _, m in backends]
        speed = f"{times[0] / times[1]:>9.2f}x" if len(times) == 2 else ""
        print(f"{name:<18}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times) + speed)


END_TO_END = """
import time
from viewkeeper import corpus, kernels, parse_schema, parse_view
from viewkeeper.datagen import GenParams, gen_dataset
from viewkeeper.relstore import evaluate_view
cat = parse_schema(corpus.read("university.sql"))
views = [parse_view(corpus.read(f), cat) for f in ("results_IT.sql", "results_BBA.sql")]
db = gen_dataset(GenParams(scale={scale}))
best = float("inf")
for _ in range({repeat}):
    t = time.perf_counter()
    for v in views:
        evaluate_view(db, v)
    best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def bench_end_to_end(scale: float, repeat: int) -> None:
    print(f"\nview evaluation on the generated dataset (scale {scale})")
    for pure in ("", "1"):
        env = dict(os.environ, VIEWKEEPER_PURE_PYTHON=pure)
        if not pure:
            env.pop("VIEWKEEPER_PURE_PYTHON")
        out = subprocess.run(
            [sys.executable, "-c", END_TO_END.format(scale=scale, repeat=repeat)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"  {out[0]:<8}{float(out[1]) * 1e3:>10.1f}ms")


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--scale", type=float, default=4.0)
    args = p.parse_args(argv)
    bench_kernels(args.rows, args.repeat)
    bench_end_to_end(args.scale, args.repeat)


if __name__ == "__main__":
    main()
