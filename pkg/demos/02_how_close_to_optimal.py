"""
How close is greedy to the best possible links?
===============================================

On instances small enough to enumerate, compare the greedy, sampled-greedy
and adaptive solvers to the exact optimum.  The worst case guarantee is
1 - 1/e, about 0.632; in practice the ratio is usually near 1.
"""

import itertools
import math

import numpy as np

from elda import (FastConfig, LtlgConfig, PlaceholderConfig, SolverConfig, fast_full, fast_greedy, ltlg,
                  objective_fdot)
from elda.synthetic import random_instance

rng = np.random.default_rng(7)
corpus, topics = random_instance(rng, num_docs=3, num_topics=4, vocab_size=8, max_types=4)
kappa = 5 / 3  # five links across three documents

# A placeholder log probability just below the smallest score keeps early
# links from dominating the objective, which makes the ratios informative.
placeholder = PlaceholderConfig(float(topics.scores.min()) - 0.5, auto_lower=False)
log_p = placeholder.log_p

# Exhaustive optimum over every set of five (topic, document) links.
ground = [(t, d) for d in range(corpus.num_docs) for t in range(topics.num_topics)]
opt = max(objective_fdot(list(links), corpus, topics, log_p) for links in itertools.combinations(ground, 5))
print(f"optimum over {math.comb(len(ground), 5)} link sets: {opt:.4f}")

greedy = fast_greedy(corpus, topics, SolverConfig(kappa=kappa), placeholder)
print(f"greedy          {greedy.objective:.4f}  ratio {greedy.objective / opt:.4f}")

ratios = [ltlg(corpus, topics, LtlgConfig(kappa=kappa, epsilon=0.2, seed=s), placeholder).objective / opt
          for s in range(50)]
print(f"sampled greedy  mean ratio over 50 seeds {np.mean(ratios):.4f}, worst {min(ratios):.4f}")

fast = fast_full(corpus, topics, FastConfig(kappa=kappa, epsilon=0.05, seed=0), placeholder)
print(f"adaptive        {fast.objective:.4f}  ratio {fast.objective / opt:.4f}  "
      f"rounds {fast.meta['adaptive_rounds']}")
print(f"guarantee       {1 - 1 / math.e:.4f}")
