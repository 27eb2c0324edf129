"""Lazier-than-lazy greedy: a sampled-candidate baseline.

Each step draws ``s = ceil((|Phi| / kappa) ln(1/eps))`` not-yet-added links
uniformly without replacement and adds the best of the sample.  Marginals
come from the per-document best-score rows, so one query touches only the
queried document's words.  The approximation guarantee holds in expectation
over the sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .greedy import RunningSum, _Problem, exact_gain, link_budget
from .objective import Link, LinkSolution, resolve_log_p


@dataclass(frozen=True)
class LtlgConfig:
    kappa: float
    epsilon: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    def sample_size(self, num_topics: int) -> int:
        return max(1, math.ceil(num_topics / self.kappa * math.log(1.0 / self.epsilon)))


def _sample_remaining(rng: np.random.Generator, size: int, taken: set, total: int) -> list[int]:
    """``size`` distinct flat link indices outside ``taken`` (all of them if fewer remain)."""
    remaining = total - len(taken)
    if size >= remaining:
        return [i for i in range(total) if i not in taken]
    if 2 * size >= remaining:
        pool = np.array([i for i in range(total) if i not in taken])
        return rng.choice(pool, size=size, replace=False).tolist()
    picked: dict[int, None] = {}
    while len(picked) < size:
        for i in rng.integers(0, total, size=2 * (size - len(picked))).tolist():
            if i not in taken and i not in picked:
                picked[i] = None
                if len(picked) == size:
                    break
    return list(picked)


def ltlg(corpus: Corpus, topics, cfg: LtlgConfig, placeholder=None) -> LinkSolution:
    prob = _Problem(corpus, topics)
    k, n_docs = prob.num_topics, prob.num_docs
    budget = link_budget(cfg.kappa, n_docs, k, cover=False)
    log_p = resolve_log_p(placeholder, topics, corpus)
    rows = [c * log_p for c in prob.counts]
    s = cfg.sample_size(k)
    rng = np.random.default_rng(cfg.seed)
    taken: set[int] = set()
    links, marginals, trace = [], [], []
    acc = RunningSum()
    queries = 0
    for _ in range(budget):
        best = None
        for flat in _sample_remaining(rng, s, taken, k * n_docs):
            d, t = divmod(flat, k)
            v = exact_gain(prob.weighted_row(d, t), rows[d])
            queries += 1
            key = (-v, d, t)
            if best is None or key < best:
                best = key
        neg, d, t = best
        taken.add(d * k + t)
        rows[d] = np.maximum(rows[d], prob.weighted_row(d, t))
        links.append(Link(t, d))
        marginals.append(-neg)
        trace.append(acc.add(-neg))
    meta = {"algorithm": "ltlg", "kappa": cfg.kappa, "budget": budget, "epsilon": cfg.epsilon,
            "seed": cfg.seed, "sample_size": s, "queries": queries}
    return LinkSolution(links, marginals, trace, log_p, meta)
