#!/usr/bin/env python3
"""Benchmark the constraint-check hot path: compiled kernel vs pure Python.

Two measurements:

* raw closure kernel on synthetic unit graphs
* full end-to-end check() over every inclusion subset of randomized
  generics (the same shape of work as the oracle acceptance suite)

Run after an editable install:

    python3 bench/bench_check.py [--generics N] [--seed S]
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from array import array
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from modelform import _closure_py, _kernel
from modelform.constraints import CheckStage, ConstraintChecker

from randgen import all_subsets, instance_for_subset, optional_paths, random_env, random_generic

try:
    from modelform import _closure

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def bench_closure(iterations: int = 20000, seed: int = 7) -> dict[str, float]:
    rng = random.Random(seed)
    cases = []
    for _ in range(200):
        n = rng.randint(8, 40)
        base = rng.getrandbits(n) & rng.getrandbits(n)
        included = rng.getrandbits(n)
        m = rng.randint(4, 2 * n)
        srcs = array("i", [rng.randrange(n) for _ in range(m)])
        dsts = array("i", [rng.randrange(n) for _ in range(m)])
        cases.append((base, srcs, dsts, included))

    out = {}
    started = time.perf_counter()
    for i in range(iterations):
        base, srcs, dsts, included = cases[i % len(cases)]
        _closure_py.close_required(base, srcs, dsts, included)
    out["pure"] = time.perf_counter() - started

    if HAVE_COMPILED:
        started = time.perf_counter()
        for i in range(iterations):
            base, srcs, dsts, included = cases[i % len(cases)]
            _closure.close_required_u64(base, srcs, dsts, included)
        out["compiled"] = time.perf_counter() - started
    return out


def bench_full_check(generics: int, seed: int) -> tuple[float, int]:
    rng = random.Random(seed)
    corpus = []
    for _ in range(generics):
        g, _frags = random_generic(rng)
        env = random_env(rng)
        insts = [
            instance_for_subset(g, subset, env) for subset in all_subsets(optional_paths(g))
        ]
        corpus.append((g, insts))
    checks = 0
    started = time.perf_counter()
    for g, insts in corpus:
        checker = ConstraintChecker(g)
        for inst in insts:
            checker.check(inst, CheckStage.INTERACTIVE)
            checks += 1
    return time.perf_counter() - started, checks


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--generics", type=int, default=150)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--iterations", type=int, default=20000)
    args = parser.parse_args()

    print(f"active kernel: {_kernel.KERNEL}")
    print()
    print(f"raw closure kernel ({args.iterations} fixpoints)")
    timings = bench_closure(args.iterations, args.seed)
    for name, seconds in timings.items():
        rate = args.iterations / seconds
        print(f"  {name:9s} {seconds:7.3f}s   {rate:10.0f} fixpoints/s")
    if "compiled" in timings:
        print(f"  speedup   {timings['pure'] / timings['compiled']:.1f}x")

    print()
    print(f"full check() sweep ({args.generics} generics, every inclusion subset)")
    elapsed, checks = bench_full_check(args.generics, args.seed)
    print(
        f"  {_kernel.KERNEL:9s} {elapsed:7.3f}s   {checks} checks   "
        f"{checks / elapsed:10.0f} checks/s"
    )
    print()
    print("set MODELFORM_PURE_KERNEL=1 and re-run to compare the full sweep "
          "on the pure kernel")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
