"""Per-iteration cost of the heap-driven greedy loop as the corpus grows.

Holds |Phi| = 200 topics and documents of at most 300 tokens fixed, and
doubles |D| from 2k to 16k at a fixed kappa, so every size performs the
same kind of iterations (second links into documents) and the mean
iteration time isolates the heap and row-refresh work.  Run directly::

    python benchmarks/bench_fastgreedy.py
"""

from __future__ import annotations

import argparse
import json

import numpy as np

from elda.greedy import SolverConfig, fast_greedy
from elda.synthetic import random_corpus, random_topics

SIZES = (2000, 4000, 8000, 16000)


def per_iteration_seconds(num_docs: int, num_topics: int = 200, vocab_size: int = 5000,
                          kappa: float = 1.5, repeats: int = 3, seed: int = 0) -> float:
    """Best-of-``repeats`` mean wall time of one post-initialisation iteration."""
    rng = np.random.default_rng(seed)
    # at most 150 word types x 2 tokens = 300 tokens per document
    corpus = random_corpus(rng, num_docs, vocab_size, max_types=150, max_count=2, zipf=0.8)
    topics = random_topics(rng, num_topics, vocab_size, concentration=0.1)
    best = float("inf")
    for _ in range(repeats):
        sol = fast_greedy(corpus, topics, SolverConfig(kappa=kappa, record_timing=True))
        steps = sol.meta["budget"] - num_docs
        best = min(best, sol.meta["loop_seconds"] / steps)
    return best


def run(sizes=SIZES, **kw) -> dict:
    times = {n: per_iteration_seconds(n, **kw) for n in sizes}
    ratios = [times[b] / times[a] for a, b in zip(sizes, sizes[1:])]
    return {"per_iteration_seconds": times, "doubling_ratios": ratios}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", type=float, default=1.5)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    res = run(kappa=args.kappa, repeats=args.repeats)
    for n, t in res["per_iteration_seconds"].items():
        print(f"|D|={n:>6}  {1e6 * t:8.1f} us/iteration")
    print("doubling ratios:", json.dumps([round(r, 3) for r in res["doubling_ratios"]]))
