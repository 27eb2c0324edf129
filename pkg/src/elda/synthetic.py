"""Random instances for tests, demos and benchmarks."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .corpus import Corpus
from .topics import TopicMatrix


def random_topics(rng: np.random.Generator, num_topics: int, vocab_size: int,
                  concentration: float = 0.3) -> TopicMatrix:
    """Dirichlet topic rows, floored away from zero and renormalised in log space."""
    phi = rng.dirichlet(np.full(vocab_size, concentration), size=num_topics)
    lp = np.log(np.maximum(phi, 1e-12))
    lp -= logsumexp(lp, axis=1)[:, None]
    return TopicMatrix(tuple(f"t{i}" for i in range(num_topics)), lp)


def random_corpus(rng: np.random.Generator, num_docs: int, vocab_size: int,
                  max_types: int = 12, max_count: int = 4, zipf: float | None = None) -> Corpus:
    """Documents with up to ``max_types`` distinct words, each repeated up to ``max_count`` times.

    With ``zipf`` set, word types are drawn from a Zipf-like popularity
    profile instead of uniformly.
    """
    p = None
    if zipf is not None:
        p = 1.0 / np.arange(1, vocab_size + 1) ** zipf
        p /= p.sum()
    rows = []
    for _ in range(num_docs):
        n = int(rng.integers(1, min(max_types, vocab_size) + 1))
        ws = rng.choice(vocab_size, size=n, replace=False, p=p)
        rows.append({int(w): int(rng.integers(1, max_count + 1)) for w in ws})
    return Corpus.from_counts(tuple(f"w{i}" for i in range(vocab_size)), rows)


def random_instance(rng: np.random.Generator, num_docs: int, num_topics: int, vocab_size: int,
                    max_types: int = 12, max_count: int = 4) -> tuple[Corpus, TopicMatrix]:
    return (random_corpus(rng, num_docs, vocab_size, max_types, max_count),
            random_topics(rng, num_topics, vocab_size))
