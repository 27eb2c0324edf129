"""
Sparsity, coherence and the unconstrained baseline
==================================================

Without a link budget, a document of n words drawn over K topics would
touch about K(1 - exp(-n/K)) distinct topics.  The budget kappa keeps it
small.  Here we sweep kappa and report the objective and the UMass
coherence of the topics that were actually used.
"""

import numpy as np

from elda import (CoherenceConfig, GeneratorConfig, SolverConfig, build_candidate_set, expected_topics_per_doc,
                  fast_greedy, ingest)
from elda.evaluate import topic_coherences

exact, approx = expected_topics_per_doc([100], 100)
print(f"a 100-word document over 100 topics: {exact:.2f} distinct topics (approximation {approx:.2f})")

# Planted structure: four themes of twelve words each, plus a pool of noise
# words.  Every document mixes one or two themes with a little noise.
rng = np.random.default_rng(3)
themes = [[f"t{k}w{i}" for i in range(12)] for k in range(4)]
noise = [f"n{i}" for i in range(40)]
raw = []
for d in range(300):
    picked = rng.choice(4, size=int(rng.integers(1, 3)), replace=False)
    words = [w for k in picked for w in rng.choice(themes[k], size=8)]
    words += list(rng.choice(noise, size=3))
    raw.append((f"doc{d}", " ".join(words)))
corpus = ingest(raw)
topics = build_candidate_set(corpus, GeneratorConfig("exp_umass"))
cfg = CoherenceConfig(h_star=5)
print(f"mean coherence of all {topics.num_topics} candidates: {topic_coherences(topics, corpus, cfg).mean():.3f}")

for kappa in (1, 2, 4):
    sol = fast_greedy(corpus, topics, SolverConfig(kappa=kappa))
    used = sorted({t for t, _ in sol.links})
    coh = topic_coherences(topics, corpus, cfg, used).mean()
    print(f"kappa={kappa}: objective {sol.objective:10.2f}, {len(used):3d} topics used, coherence {coh:.3f}")
    print("   most linked:", [topics.labels[t] for t in np.argsort(-np.bincount([t for t, _ in sol.links],
                                                                         minlength=topics.num_topics))[:8]])
