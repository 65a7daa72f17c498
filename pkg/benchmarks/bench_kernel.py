"""Compare the compiled and pure-Python simulation kernels.

Usage: python benchmarks/bench_kernel.py [--repeat N]

Times action enumeration, one rollout round at M = T = 10 and a few greedy
games, checks that both backends return identical results and prints the
speed-up.
"""

import argparse
import time

from ipse import kernel
from ipse.features import BCTS_DIRECTIONS, BCTS_WEIGHTS
from ipse.rng import SplitMix64


def boards(n, seed=1):
    rng = SplitMix64(seed)
    out = []
    while len(out) < n:
        rows = [0] * 10
        for r in range(rng.below(7)):
            rows[r] = rng.below(1023)
        out.append((tuple(rows), rng.below(7)))
    return out


def workloads(impl):
    states = boards(200)
    w = [float(x) for x in BCTS_DIRECTIONS]

    def enumerate_all():
        return [impl.enumerate_actions(rows, 10, 10, p) for rows, p in states]

    def rollout_round():
        rows, p = (0,) * 10, 2
        n = len(impl.legal_placements(rows, 10, 10, p))
        return impl.rollout_values(rows, 10, 10, p, list(range(n)), w, True, 10, 10, 0.9, 5)

    def games():
        return impl.play_games(10, 10, list(BCTS_WEIGHTS), False, 3, 20_000, 11)

    return {"enumerate 200 boards": enumerate_all, "rollout round (34x10x10)": rollout_round,
            "3 greedy games": games}


def timed(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    impls = kernel.backends()
    if "compiled" not in impls:
        print("compiled extension not available; only the Python kernel can be timed")
    tables = {name: workloads(impl) for name, impl in impls.items()}
    print(f"{'workload':28s}" + "".join(f"{n:>12s}" for n in impls) + "    speed-up")
    for label in tables["python"]:
        times, results = {}, {}
        for name in impls:
            times[name], results[name] = timed(tables[name][label], args.repeat)
        row = f"{label:28s}" + "".join(f"{times[n] * 1e3:10.1f}ms" for n in impls)
        if "compiled" in impls:
            same = results["python"] == results["compiled"]
            row += f"  {times['python'] / times['compiled']:8.1f}x" + ("" if same else "  MISMATCH")
        print(row)


if __name__ == "__main__":
    main()
