"""Compiled kernels vs the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 20000] [--budget 500] [--mi-budget 300]

Times the greedy sampler (compiled, lazy, linear) on a generated pool and the
MI pair sums on a sample of it, and checks that every backend agrees.
"""

from __future__ import annotations

import argparse
import time

from structdiv import _backend
from structdiv.analysis import _bags, _mi_sums_py, cooccurrence
from structdiv.astcore import LexerConfig
from structdiv.dataset import build_records
from structdiv.grammar import bundled_grammar, gen_pool
from structdiv.index import build_index
from structdiv.sampler import preset, sample_diverse, sample_random
from structdiv.substructures import BagExtractor, SubstructureConfig


def timed(fn, repeat=1):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--budget", type=int, default=500)
    ap.add_argument("--mi-budget", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = gen_pool(bundled_grammar(), args.n, args.seed)
    pool = build_records(rows, BagExtractor(SubstructureConfig(), LexerConfig()))
    index = build_index(pool)
    print(f"pool: {len(pool)} instances, {len(index.keys)} subtrees; kernels: {_backend.NAME}")

    strategies = (["compiled"] if _backend.HAVE_COMPILED else []) + ["lazy", "linear"]
    print(f"\ngreedy sampler, budget {args.budget}")
    for name in ("subtree-randex", "subtree-freqnewt", "bigram"):
        cfg = preset(name, args.budget, args.seed)
        idx = index if cfg.substructure.kind.name == "SUBTREE" else build_index(
            build_records(rows, BagExtractor(cfg.substructure, LexerConfig())))
        traces = {}
        for s in strategies:
            secs, res = timed(lambda: sample_diverse(idx, cfg, s), repeat=1 if s == "linear" else 3)
            traces[s] = res.picks
            print(f"  {name:18s} {s:9s} {secs * 1000:9.1f} ms")
        same = all(t == traces[strategies[0]] for t in traces.values())
        print(f"  {name:18s} traces identical: {same}")

    by_id = {r.id: r for r in pool}
    sample = [by_id[i] for i in sample_random(pool, args.mi_budget, args.seed).ids]
    keys, counts, co = cooccurrence(_bags(sample))
    print(f"\nMI pair sums: {len(sample)} instances, {len(keys)} keys, {len(keys) ** 2} pairs")
    py_secs, py = timed(lambda: _mi_sums_py(co, counts, len(sample)))
    print(f"  python/numpy {py_secs * 1000:9.1f} ms")
    if _backend.HAVE_COMPILED:
        c_secs, c = timed(lambda: _backend.compiled.mi_sums(co, counts, len(sample)), repeat=3)
        print(f"  compiled     {c_secs * 1000:9.1f} ms  (x{py_secs / c_secs:.1f})")
        print(f"  max abs difference: {max(abs(a - b) for a, b in zip(c, py)):.2e}")


if __name__ == "__main__":
    main()
