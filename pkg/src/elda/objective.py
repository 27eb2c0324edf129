"""MAP objective, word assignments and the full finite-alpha log posterior.

Everything here is a slow, transparent reference implementation.  The
solvers in :mod:`elda.greedy`, :mod:`elda.ltlg` and :mod:`elda.fast` are
tested against these functions.

Sums of log probabilities go through :func:`math.fsum`.  A marginal value
``f(E + a) - f(E)`` is evaluated as one exactly rounded sum over the term
lists of both full evaluations, so terms of untouched documents cancel
exactly and the result equals the correctly rounded gain of ``a``'s
document alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from .corpus import Corpus, DocRow
from .errors import DuplicateLinkError, MissingLinkError
from .topics import TopicMatrix, as_scores

DEFAULT_LOG_P = math.log(1e-10)


class Link(NamedTuple):
    topic: int
    doc: int


@dataclass(frozen=True)
class PlaceholderConfig:
    """The improper placeholder topic linked to every document.

    ``log_p`` must lie below every topic score.  With ``auto_lower`` the
    value is further lowered (never raised) until any first link to a
    document outweighs any later link, which is the infinitesimal-placeholder
    regime in which the serial solvers coincide.  Link choices do not depend
    on the exact value once that holds.
    """

    log_p: float = DEFAULT_LOG_P
    auto_lower: bool = True

    def resolve(self, topics, corpus: Corpus) -> float:
        s = as_scores(topics)
        smin, smax = float(s.min()), float(s.max())
        lengths = corpus.lengths
        ratio = float(lengths.max()) / float(lengths.min())
        bound = smin - ratio * (smax - smin) - 1.0
        if self.auto_lower:
            return min(self.log_p, bound)
        if not self.log_p < smin:
            raise ValueError(f"placeholder log_p={self.log_p} is not below the smallest topic score {smin}")
        return self.log_p


def resolve_log_p(placeholder, topics, corpus) -> float:
    if placeholder is None:
        placeholder = PlaceholderConfig()
    if isinstance(placeholder, PlaceholderConfig):
        return placeholder.resolve(topics, corpus)
    return float(placeholder)


@dataclass
class LinkSolution:
    """Links in the order a solver added them.

    ``marginals[j]`` is the gain of ``links[j]`` at insertion and
    ``objective_trace[j]`` the objective of the first ``j + 1`` links.
    """

    links: list
    marginals: list
    objective_trace: list
    log_p: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.links)

    def prefix(self, j: int) -> "LinkSolution":
        return LinkSolution(self.links[:j], self.marginals[:j], self.objective_trace[:j],
                            self.log_p, dict(self.meta))

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else 0.0

    def per_document(self, num_docs: int) -> list[list[int]]:
        """Topics linked to each document, in insertion order."""
        out = [[] for _ in range(num_docs)]
        for t, d in self.links:
            out[d].append(t)
        return out


@dataclass
class Assignment:
    """Topic of every token position.

    ``tokens[d]`` is aligned with ``corpus.docs[d].tokens()`` (word ids
    ascending, repeated by count).  ``linked[d]`` optionally records the
    document's linked topics in solution order.
    """

    tokens: list
    linked: list | None = None

    def word_topics(self, corpus: Corpus) -> list[dict[int, int]]:
        """Per document, word id -> topic (first token of each word type)."""
        out = []
        for row, z in zip(corpus.docs, self.tokens):
            starts = np.concatenate(([0], np.cumsum(row.counts)[:-1]))
            out.append(dict(zip(row.word_ids.tolist(), np.asarray(z)[starts].tolist())))
        return out

    def topic_counts(self, num_topics: int) -> np.ndarray:
        """``n[d, tau]``: tokens of document d assigned to topic tau."""
        n = np.zeros((len(self.tokens), num_topics), dtype=np.int64)
        for d, z in enumerate(self.tokens):
            np.add.at(n[d], np.asarray(z, dtype=np.int64), 1)
        return n

    def topics_per_doc(self) -> np.ndarray:
        return np.array([len(np.unique(z)) for z in self.tokens], dtype=np.float64)


def _links_by_doc(links: Iterable, num_docs: int) -> list[list[int]]:
    by_doc = [[] for _ in range(num_docs)]
    for t, d in links:
        by_doc[d].append(int(t))
    return by_doc


def _weighted(row: DocRow, scores: np.ndarray, topic_ids) -> np.ndarray:
    """count * score for each listed topic (rows) and the document's word types."""
    c = row.counts.astype(np.float64)
    return c * scores[np.asarray(topic_ids, dtype=np.int64)][:, row.word_ids]


def _best_terms(row: DocRow, scores: np.ndarray, topic_ids, log_p: float | None) -> list[float]:
    """Per word type: count * best score over ``topic_ids`` (and the placeholder)."""
    cand = []
    if topic_ids:
        cand.append(_weighted(row, scores, topic_ids).max(axis=0))
    if log_p is not None:
        cand.append(row.counts.astype(np.float64) * log_p)
    return np.maximum.reduce(cand).tolist()


def assign_words(doc: DocRow, linked_topics, topics) -> dict[int, int]:
    """Best linked topic for each word type of ``doc`` (ties -> lowest topic id)."""
    linked = sorted(set(int(t) for t in linked_topics))
    if not linked:
        raise MissingLinkError("cannot assign words without a linked topic")
    scores = as_scores(topics)
    best = np.argmax(scores[linked][:, doc.word_ids], axis=0)
    return {int(w): linked[b] for w, b in zip(doc.word_ids, best)}


def assignment_from_links(links, corpus: Corpus, topics) -> Assignment:
    """Token-level MAP assignment implied by a link set."""
    by_doc = _links_by_doc(links, corpus.num_docs)
    toks, linked = [], []
    for d, row in enumerate(corpus.docs):
        wt = assign_words(row, by_doc[d], topics)
        toks.append(np.repeat([wt[w] for w in row.word_ids.tolist()], row.counts))
        linked.append(list(dict.fromkeys(by_doc[d])))
    return Assignment(toks, linked)


def objective_f(links, corpus: Corpus, topics) -> float:
    """Sum over tokens of the best linked topic's log score."""
    scores = as_scores(topics)
    by_doc = _links_by_doc(links, corpus.num_docs)
    terms = []
    for d, row in enumerate(corpus.docs):
        if not by_doc[d]:
            raise MissingLinkError(f"document {d} has no linked topic")
        terms.extend(_best_terms(row, scores, by_doc[d], None))
    return math.fsum(terms)


def _fdot_terms(links, corpus, scores, log_p, sign=1.0) -> list[float]:
    by_doc = _links_by_doc(links, corpus.num_docs)
    terms = []
    for d, row in enumerate(corpus.docs):
        terms.extend(_best_terms(row, scores, by_doc[d], log_p))
    if sign < 0:
        terms = [-x for x in terms]
    return terms


def _placeholder_terms(corpus, log_p) -> list[float]:
    out = []
    for row in corpus.docs:
        out.extend((-(row.counts.astype(np.float64) * log_p)).tolist())
    return out


def objective_fdot(links, corpus: Corpus, topics, log_p: float = DEFAULT_LOG_P) -> float:
    """``f(E + P) - f(P)``: defined for any link set, zero when empty."""
    scores = as_scores(topics)
    links = list(links)
    if not links:
        return 0.0
    return math.fsum(_fdot_terms(links, corpus, scores, log_p) + _placeholder_terms(corpus, log_p))


def marginal_value_naive(links, link, corpus: Corpus, topics, log_p: float = DEFAULT_LOG_P) -> float:
    """``fdot(E + link) - fdot(E)`` from two full evaluations."""
    links = [Link(int(t), int(d)) for t, d in links]
    link = Link(int(link[0]), int(link[1]))
    if link in set(links):
        raise DuplicateLinkError(f"link {tuple(link)} is already in the solution")
    scores = as_scores(topics)
    after = _fdot_terms(links + [link], corpus, scores, log_p)
    before = _fdot_terms(links, corpus, scores, log_p, sign=-1.0)
    return math.fsum(after + before)


def unconstrained_optimum(corpus: Corpus, topics, log_p: float = DEFAULT_LOG_P) -> float:
    """``fdot`` with every topic linked to every document."""
    k = as_scores(topics).shape[0]
    return objective_fdot([(t, d) for d in range(corpus.num_docs) for t in range(k)], corpus, topics, log_p)


def log_posterior_full(assignment: Assignment, corpus: Corpus, topics, alpha) -> float:
    """Collapsed LDA log posterior of a token assignment (theta integrated out).

    Returns the right-hand side as written, i.e. up to the additive constant
    hidden in the proportionality.
    """
    log_phi = topics.log_probs if isinstance(topics, TopicMatrix) else np.asarray(topics, dtype=np.float64)
    k = log_phi.shape[0]
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (k,))
    if not np.all(alpha > 0) or not np.all(np.isfinite(alpha)):
        raise ValueError("alpha must be positive and finite")
    a_sum = float(alpha.sum())
    const = float(gammaln(a_sum)) - float(gammaln(alpha).sum())
    n = assignment.topic_counts(k)
    terms = []
    for d, row in enumerate(corpus.docs):
        z = np.asarray(assignment.tokens[d], dtype=np.int64)
        w = row.tokens()
        if z.shape != w.shape:
            raise ValueError(f"assignment for document {d} has {z.size} tokens, expected {w.size}")
        terms.extend(log_phi[z, w].tolist())
        terms.extend(gammaln(n[d] + alpha).tolist())
        terms.append(const - float(gammaln(a_sum + row.length)))
    return math.fsum(terms)


def likelihood_term(assignment: Assignment, corpus: Corpus, topics) -> float:
    """The ``sum log phi_z[w]`` part of :func:`log_posterior_full`."""
    log_phi = topics.log_probs if isinstance(topics, TopicMatrix) else np.asarray(topics, dtype=np.float64)
    terms = []
    for d, row in enumerate(corpus.docs):
        terms.extend(log_phi[np.asarray(assignment.tokens[d], dtype=np.int64), row.tokens()].tolist())
    return math.fsum(terms)


def expected_topics_per_doc(doc_lengths: Sequence[int], num_topics: int) -> tuple[float, float]:
    """Expected distinct topics per document when every word picks its own
    best topic uniformly at random: ``(exact, exponential approximation)``."""
    k = float(num_topics)
    lengths = np.asarray(doc_lengths, dtype=np.float64)
    if k < 1 or lengths.size == 0 or np.any(lengths < 1):
        raise ValueError("need num_topics >= 1 and document lengths >= 1")
    exact = float(np.mean(k * (1.0 - ((k - 1.0) / k) ** lengths)))
    approx = float(k / lengths.size * np.sum(1.0 - np.exp(-lengths / k)))
    return exact, approx
