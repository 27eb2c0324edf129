"""Serial greedy solvers.

``simple_greedy`` rescans every link each step and is kept as an oracle.
``fast_greedy`` is the production solver: one pass of per-document
initialisation, then a max-heap holding each document's best remaining
link.  Adding a link to document ``d`` only changes marginal values of
links into ``d``, so each step costs one heap pop, one row refresh over
``d``'s words and one push.

Ties break toward the lower document index, then the lower topic index.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .errors import BudgetError, EldaError
from .objective import Link, LinkSolution, _best_terms, marginal_value_naive, resolve_log_p
from .topics import as_scores

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    kappa: float
    lazy_word_skip: bool = True
    track_trace: bool = True
    debug: bool = False
    record_timing: bool = False

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


def link_budget(kappa: float, num_docs: int, num_topics: int, cover: bool = True) -> int:
    """``floor(kappa * |D|)``, validated against the ground set."""
    budget = int(math.floor(kappa * num_docs + 1e-9))
    if cover and budget < num_docs:
        raise BudgetError(f"kappa*|D| = {kappa * num_docs:g} < |D| = {num_docs}; every document needs a link")
    if budget < 1:
        raise BudgetError(f"kappa*|D| = {kappa * num_docs:g} leaves no room for a single link")
    if budget > num_topics * num_docs:
        raise BudgetError(f"kappa*|D| = {budget} exceeds the {num_topics * num_docs} available links")
    return budget


class RunningSum:
    """Running total whose every reported value is the correctly rounded sum
    of the floats added so far (Shewchuk partials, as in :func:`math.fsum`)."""

    def __init__(self):
        self.partials: list[float] = []

    def add(self, x: float) -> float:
        x = float(x)
        i = 0
        for y in self.partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                self.partials[i] = lo
                i += 1
            x = hi
        self.partials[i:] = [x]
        return math.fsum(self.partials)


def row_gains(S: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Sum over columns of ``max(S - base, 0)``, accumulated left to right.

    Sequential accumulation makes the result insensitive to dropping
    all-zero columns, which is what lets lazy word skipping reproduce the
    eager values bit for bit.
    """
    if S.shape[1] == 0:
        return np.zeros(S.shape[0])
    G = np.maximum(S - base, 0.0)
    return np.cumsum(G, axis=1)[:, -1]


def exact_gain(x: np.ndarray, base: np.ndarray) -> float:
    """Correctly rounded ``sum(max(x, base) - base)``.

    Words where ``x`` does not beat ``base`` contribute exactly zero, so only
    the improving terms enter the compensated sum.  The result equals
    :func:`marginal_value_naive` bit for bit.
    """
    mask = x > base
    if not mask.any():
        return 0.0
    return math.fsum(np.concatenate((x[mask], -base[mask])).tolist())


@dataclass
class MemoState:
    """Memoised solver state.

    ``P[d]`` holds count-weighted best log scores over document ``d``'s word
    types (aligned with ``corpus.docs[d].word_ids``), ``p[d]`` their sum and
    ``M[d, t]`` the current gain of link ``t -> d``.  ``heap`` has one entry
    ``(-gain, d, t)`` per document that still has unlinked topics.
    """

    P: list
    p: np.ndarray
    M: np.ndarray
    linked: np.ndarray
    heap: list
    log_p: float
    alive: list = field(default_factory=list)
    live_words: list = field(default_factory=list)

    def dense_P(self, corpus: Corpus) -> np.ndarray:
        out = np.zeros((corpus.num_docs, corpus.num_words))
        for d, row in enumerate(corpus.docs):
            out[d, row.word_ids] = self.P[d]
        return out


class _Problem:
    """Per-document views of (corpus, scores) shared by the fast solvers.

    Scores are also kept word-major (``|V| x |Phi|``) so gathering one
    document's words reads contiguous rows.
    """

    def __init__(self, corpus: Corpus, topics):
        self.corpus = corpus
        self.scores = as_scores(topics)
        if self.scores.shape[1] != corpus.num_words:
            raise ValueError(f"topics cover {self.scores.shape[1]} words, corpus has {corpus.num_words}")
        self.scores_wt = np.ascontiguousarray(self.scores.T)
        self.words = [row.word_ids for row in corpus.docs]
        self.counts = [row.counts.astype(np.float64) for row in corpus.docs]
        self.num_docs = corpus.num_docs
        self.num_topics = self.scores.shape[0]

    def weighted(self, d: int, topic_ids=None, cols=None) -> np.ndarray:
        """count * score, shape ``(words, topics)``."""
        w, c = self.words[d], self.counts[d]
        if cols is not None:
            w, c = w[cols], c[cols]
        block = self.scores_wt[w]
        if topic_ids is not None:
            block = block[:, np.asarray(topic_ids, dtype=np.intp)]
        return c[:, None] * block

    def weighted_row(self, d: int, t: int) -> np.ndarray:
        return self.counts[d] * self.scores[t, self.words[d]]


def block_gains(S: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Word-major counterpart of :func:`row_gains`: ``S`` is ``(words, topics)``."""
    if S.shape[0] == 0:
        return np.zeros(S.shape[1])
    return np.cumsum(np.maximum(S - base[:, None], 0.0), axis=0)[-1]


def _best_link(state: MemoState, d: int, prob: "_Problem", row: np.ndarray) -> tuple[int, float]:
    """Best free topic for ``d`` and its exact gain.

    ``row`` holds memoised gains (``-inf`` for linked topics).  Topics within
    rounding distance of the row maximum are re-scored exactly, so choices
    follow exact gains with ties going to the lower topic id.
    """
    top = float(row.max())
    if top <= 0.0:
        return int(np.argmax(row)), 0.0
    cand = np.flatnonzero(row >= top - 1e-9 * max(1.0, abs(top)))
    best_t, best_v = -1, -math.inf
    for t in cand.tolist():
        v = exact_gain(prob.weighted_row(d, t), state.P[d])
        if v > best_v:
            best_t, best_v = t, v
    return best_t, best_v


def _push_best(state: MemoState, d: int, prob: "_Problem") -> None:
    free = ~state.linked[d]
    if not free.any():
        return
    t, v = _best_link(state, d, prob, np.where(free, state.M[d], -np.inf))
    heapq.heappush(state.heap, (-v, d, t))


def fast_initialize(corpus: Corpus, topics, placeholder=None, lazy_word_skip: bool = True,
                    _problem: _Problem | None = None):
    """Link every document to its best topic.

    Returns the initial links (ordered by gain, then document) with their
    gains, and the memo state after applying :func:`update` for each.
    """
    prob = _problem or _Problem(corpus, topics)
    log_p = resolve_log_p(placeholder, topics, corpus)
    P = [c * log_p for c in prob.counts]
    p = np.array([row.sum() for row in P])
    M = np.asarray(corpus.counts_matrix @ prob.scores.T) - p[:, None]
    k = prob.num_topics
    state = MemoState(P=P, p=p, M=M, linked=np.zeros((prob.num_docs, k), dtype=bool), heap=[], log_p=log_p)
    if lazy_word_skip:
        state.alive = [np.arange(k) for _ in range(prob.num_docs)]
        state.live_words = [np.arange(w.size) for w in prob.words]
    first = [_best_link(state, d, prob, M[d]) for d in range(prob.num_docs)]
    order = sorted(range(prob.num_docs), key=lambda d: (-first[d][1], d))
    links, marginals = [], []
    for d in order:
        link = Link(first[d][0], d)
        links.append(link)
        marginals.append(first[d][1])
        update(state, link, corpus, topics, lazy_word_skip=lazy_word_skip, _problem=prob)
    return links, marginals, state


def update(state: MemoState, added: Link, corpus: Corpus, topics, lazy_word_skip: bool = True,
           debug: bool = False, _problem: _Problem | None = None) -> MemoState:
    """Apply ``added`` to the memo and refresh the gains of links into its document."""
    prob = _problem or _Problem(corpus, topics)
    t, d = int(added.topic), int(added.doc)
    state.p[d] += state.M[d, t]
    state.P[d] = np.maximum(state.P[d], prob.weighted_row(d, t))
    state.linked[d, t] = True
    state.M[d, t] = 0.0
    if lazy_word_skip:
        cand = state.alive[d]
        cand = cand[cand != t]
        cols = state.live_words[d]
        if cols.size and cand.size:
            G = np.maximum(prob.weighted(d, cand, cols) - state.P[d][cols][:, None], 0.0)
            m = np.cumsum(G, axis=0)[-1]
            keep = m > 0
            state.live_words[d] = cols[G[:, keep].any(axis=1)]
        else:
            m = np.zeros(cand.size)
            keep = np.zeros(cand.size, dtype=bool)
            state.live_words[d] = cols[:0]
        state.M[d, cand] = m
        state.alive[d] = cand[keep]
    else:
        cand = np.flatnonzero(~state.linked[d])
        state.M[d, cand] = block_gains(prob.weighted(d, cand), state.P[d])
    if debug:
        total = math.fsum(state.P[d].tolist())
        if abs(state.p[d] - total) > 1e-6 * max(1.0, abs(total)):
            raise EldaError(f"memo drift for document {d}: p={state.p[d]!r}, sum(P)={total!r}")
    _push_best(state, d, prob)
    return state


def fast_greedy(corpus: Corpus, topics, cfg: SolverConfig, placeholder=None) -> LinkSolution:
    """Greedy maximisation of the MAP objective under ``|E| <= kappa |D|``.

    Every prefix of the returned link order is a (1 - 1/e)-approximation for
    its own budget, so one run serves all sparsity levels up to ``kappa``.
    """
    prob = _Problem(corpus, topics)
    budget = link_budget(cfg.kappa, prob.num_docs, prob.num_topics)
    t0 = time.perf_counter()
    links, marginals, state = fast_initialize(corpus, topics, placeholder, cfg.lazy_word_skip, _problem=prob)
    t1 = time.perf_counter()
    acc = RunningSum()
    trace = [acc.add(m) for m in marginals]
    for _ in range(budget - prob.num_docs):
        neg, d, t = heapq.heappop(state.heap)
        if cfg.debug:
            _check_extraction(state, d, t, -neg)
        link = Link(t, d)
        links.append(link)
        marginals.append(-neg)
        trace.append(acc.add(-neg))
        update(state, link, corpus, topics, cfg.lazy_word_skip, cfg.debug, _problem=prob)
    meta = {"algorithm": "fastgreedy", "kappa": cfg.kappa, "budget": budget}
    if cfg.record_timing:
        meta["init_seconds"] = t1 - t0
        meta["loop_seconds"] = time.perf_counter() - t1
    return LinkSolution(links, marginals, trace if cfg.track_trace else trace[-1:], state.log_p, meta)


def _check_extraction(state: MemoState, d: int, t: int, value: float) -> None:
    M = np.where(state.linked, -np.inf, state.M)
    best = float(M.max())
    tol = 1e-9 * max(1.0, abs(best))
    if abs(value - best) > tol or state.M[d, t] < best - tol:
        raise EldaError(f"heap returned link {(t, d)} with gain {value!r} but the best remaining gain is {best!r}")


def simple_greedy(corpus: Corpus, topics, kappa: float, placeholder=None) -> LinkSolution:
    """Reference greedy: every step rescans all remaining links from scratch.

    Gains are screened with vectorised sums and the leaders re-evaluated with
    :func:`marginal_value_naive`; the recorded marginals are those exact values
    and the trace holds their correctly rounded running sums.
    """
    scores = as_scores(topics)
    k, n_docs = scores.shape[0], corpus.num_docs
    budget = link_budget(kappa, n_docs, k, cover=False)
    log_p = resolve_log_p(placeholder, topics, corpus)
    links: list[Link] = []
    by_doc = [[] for _ in range(n_docs)]
    marginals, trace = [], []
    acc = RunningSum()
    for _ in range(budget):
        gains = np.full((n_docs, k), -np.inf)
        for d, row in enumerate(corpus.docs):
            base = np.asarray(_best_terms(row, scores, by_doc[d], log_p))
            g = row_gains(row.counts.astype(np.float64) * scores[:, row.word_ids], base)
            g[by_doc[d]] = -np.inf
            gains[d] = g
        top = gains.max()
        if top == 0.0:
            d, t = map(int, np.argwhere(gains == 0.0)[0])
            best_link, best_val = Link(t, d), 0.0
        else:
            tol = 1e-9 * max(1.0, abs(top))
            best_link, best_val = None, -math.inf
            for d, t in np.argwhere(gains >= top - tol):
                v = marginal_value_naive(links, (t, d), corpus, scores, log_p)
                if v > best_val:
                    best_link, best_val = Link(int(t), int(d)), v
        links.append(best_link)
        by_doc[best_link.doc].append(best_link.topic)
        marginals.append(best_val)
        trace.append(acc.add(best_val))
    return LinkSolution(links, marginals, trace, log_p, {"algorithm": "simple", "kappa": kappa, "budget": budget})
