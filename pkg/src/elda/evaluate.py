"""Post-hoc evaluation: UMass coherence, solution reports and posterior
comparisons between two assignments of one corpus."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import Corpus, co_doc_count_block, doc_frequencies
from .objective import Assignment, LinkSolution, likelihood_term, log_posterior_full
from .topics import TopicMatrix, as_scores

DEFAULT_HSTARS = (5, 10, 15, 20, 25)


@dataclass(frozen=True)
class CoherenceConfig:
    h_star: int = 10
    epsilon: float = 0.01

    def __post_init__(self):
        if int(self.h_star) != self.h_star or self.h_star < 2:
            raise ValueError("h_star must be an integer >= 2")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def top_words(row, h_star: int) -> list[int]:
    """Ids of the ``h_star`` most probable words; ties go to the lower id."""
    row = np.asarray(row, dtype=np.float64)
    if not 1 <= h_star <= row.size:
        raise ValueError(f"h_star={h_star} out of range for a vocabulary of {row.size} words")
    order = np.lexsort((np.arange(row.size), -row))
    return order[:h_star].tolist()


def umass_coherence(row, corpus: Corpus, cfg: CoherenceConfig, _df: np.ndarray | None = None) -> float:
    """Mean over ordered top-word pairs of ``log((D(w_h, w_l) + eps) / D(w_l))``."""
    ids = top_words(row, cfg.h_star)
    df = doc_frequencies(corpus) if _df is None else _df
    if np.any(df[ids] == 0):
        missing = [corpus.vocab[i] for i in ids if df[i] == 0]
        raise ValueError(f"top words never occur in the corpus: {', '.join(missing)}")
    co = co_doc_count_block(corpus, ids)[:, ids].astype(np.float64)
    terms = [math.log((co[h, l] + cfg.epsilon) / df[ids[l]])
             for h in range(1, len(ids)) for l in range(h)]
    h = cfg.h_star
    return 2.0 / (h * (h - 1)) * math.fsum(terms)


def topic_coherences(topics, corpus: Corpus, cfg: CoherenceConfig, topic_ids: Sequence[int] | None = None) -> np.ndarray:
    """Coherence of each listed topic (all topics by default)."""
    lp = topics.log_probs if isinstance(topics, TopicMatrix) else np.asarray(topics, dtype=np.float64)
    ids = range(lp.shape[0]) if topic_ids is None else topic_ids
    df = doc_frequencies(corpus)
    return np.array([umass_coherence(lp[t], corpus, cfg, df) for t in ids])


def _labels(topics) -> tuple:
    if isinstance(topics, TopicMatrix):
        return topics.labels
    return tuple(str(i) for i in range(as_scores(topics).shape[0]))


def _coherence_summary(topics, corpus, topic_ids, h_stars, epsilon) -> dict:
    out = {}
    for h in h_stars:
        c = topic_coherences(topics, corpus, CoherenceConfig(h, epsilon), topic_ids)
        out[str(h)] = {"mean": float(np.mean(c)), "min": float(np.min(c)), "max": float(np.max(c))}
    return out


@dataclass(frozen=True)
class ReportConfig:
    h_stars: tuple = DEFAULT_HSTARS
    epsilon: float = 0.01
    sweep: bool = False


def solution_report(solution: LinkSolution, corpus: Corpus, topics, cfg: ReportConfig | None = None) -> dict:
    """Summary record of a solution (JSON-serialisable).

    With ``cfg.sweep`` the record also covers every prefix holding
    ``j * |D|`` links for ``j = 1 .. floor(|E| / |D|)``.
    """
    cfg = cfg or ReportConfig()
    labels = _labels(topics)
    n_docs = corpus.num_docs
    used = sorted({t for t, _ in solution.links})
    usage = Counter(labels[t] for t, _ in solution.links)
    report = {
        "objective": float(solution.objective),
        "num_links": len(solution.links),
        "mean_links_per_doc": len(solution.links) / n_docs,
        "coherence": _coherence_summary(topics, corpus, used, cfg.h_stars, cfg.epsilon) if used else {},
        "trace": [float(x) for x in solution.objective_trace],
        "topic_usage": {labels[t]: usage[labels[t]] for t in used},
    }
    if cfg.sweep:
        sweep = []
        for j in range(1, len(solution.links) // n_docs + 1):
            pre = solution.prefix(j * n_docs)
            pre_used = sorted({t for t, _ in pre.links})
            sweep.append({"links_per_doc": j, "objective": float(pre.objective),
                          "coherence": _coherence_summary(topics, corpus, pre_used, cfg.h_stars, cfg.epsilon)})
        report["sweep"] = sweep
    return report


def render_table(report: dict) -> str:
    """Plain-text rendering of :func:`solution_report` output."""
    lines = [f"objective            {report['objective']:.6f}",
             f"links                {report['num_links']}",
             f"mean links per doc   {report['mean_links_per_doc']:.4f}",
             f"distinct topics      {len(report['topic_usage'])}",
             "",
             f"{'h*':>4} {'mean':>12} {'min':>12} {'max':>12}"]
    for h, c in report["coherence"].items():
        lines.append(f"{h:>4} {c['mean']:>12.5f} {c['min']:>12.5f} {c['max']:>12.5f}")
    for row in report.get("sweep", []):
        means = "  ".join(f"h{h}={c['mean']:.4f}" for h, c in row["coherence"].items())
        lines.append(f"kappa={row['links_per_doc']:<3} objective={row['objective']:.6f}  {means}")
    return "\n".join(lines) + "\n"


class Comparison(NamedTuple):
    delta_likelihood: float
    delta_posterior: float
    topics_per_doc_a: float
    topics_per_doc_b: float


def _check_cover(assign: Assignment, corpus: Corpus, num_topics: int, name: str) -> None:
    if len(assign.tokens) != corpus.num_docs:
        raise ValueError(f"assignment {name} covers {len(assign.tokens)} documents, corpus has {corpus.num_docs}")
    for d, (z, row) in enumerate(zip(assign.tokens, corpus.docs)):
        z = np.asarray(z)
        if z.size != row.length:
            raise ValueError(f"assignment {name}, document {d}: {z.size} tokens, expected {row.length}")
        if z.size and (z.min() < 0 or z.max() >= num_topics):
            raise ValueError(f"assignment {name}, document {d}: topic id outside 0..{num_topics - 1}")


def compare_assignments(a: Assignment, b: Assignment, corpus: Corpus, topics, alpha) -> Comparison:
    """``a`` minus ``b`` in likelihood term and full log posterior, plus each
    side's mean distinct topics per document."""
    k = as_scores(topics).shape[0]
    _check_cover(a, corpus, k, "a")
    _check_cover(b, corpus, k, "b")
    dl = likelihood_term(a, corpus, topics) - likelihood_term(b, corpus, topics)
    dp = log_posterior_full(a, corpus, topics, alpha) - log_posterior_full(b, corpus, topics, alpha)
    return Comparison(dl, dp, float(a.topics_per_doc().mean()), float(b.topics_per_doc().mean()))


def permute_within_documents(assign: Assignment, rng: np.random.Generator) -> Assignment:
    """Relabel each document's topics by a random permutation of the topics it uses.

    The number of distinct topics per document is unchanged, so the result
    has the same sparsity as the input.
    """
    out = []
    for z in assign.tokens:
        z = np.asarray(z)
        used = np.unique(z)
        perm = dict(zip(used.tolist(), rng.permutation(used).tolist()))
        out.append(np.array([perm[t] for t in z.tolist()], dtype=np.int64))
    return Assignment(out, None if assign.linked is None else [list(x) for x in assign.linked])


def permute_topics_globally(assign: Assignment, num_topics: int, rng: np.random.Generator) -> Assignment:
    """Apply one random permutation of all topic ids to every token."""
    perm = rng.permutation(num_topics)
    return Assignment([perm[np.asarray(z, dtype=np.int64)] for z in assign.tokens])
