"""Low-adaptivity solver: the FAST adaptive-sequencing algorithm and its
guess-and-certify outer loop.

Every query FAST issues is the marginal value of a single link against the
current solution plus a prefix of a random sequence.  Because documents are
independent, such a query only needs the queried document's best-score row
from the current solution, overlaid with the prefix's links into that same
document (:class:`PrefixQueryContext`).  All queries are evaluated exactly,
so the threshold decisions are the ones a from-scratch evaluation would make.

Round accounting: the singleton scan is one round; inside FAST each
sequence pass, each survivor filter and each binary-search probe over
the sampled prefixes is one round.  Guesses are searched sequentially, so
their rounds add up.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import CertificationError
from .greedy import RunningSum, _Problem, block_gains, exact_gain, link_budget
from .objective import Link, LinkSolution, resolve_log_p

logger = logging.getLogger(__name__)

CERT_RATIO = 1.0 - 1.0 / math.e


@dataclass(frozen=True)
class FastConfig:
    kappa: float
    epsilon: float = 0.05
    delta: float = 0.05
    seed: int = 0
    sample_m: int | None = None  # None -> theoretical sample complexity
    max_inner_iterations: int = 10_000

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.epsilon < 0.1:
            raise ValueError("epsilon must lie in (0, 0.1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.sample_m is not None and self.sample_m < 1:
            raise ValueError("sample_m must be at least 1")


def ell(budget: int, epsilon: float) -> float:
    """``log(log(budget) / epsilon)``, floored at 1 for tiny budgets."""
    lb = math.log(budget) if budget > 1 else 0.0
    if lb <= 0.0:
        return 1.0
    return max(1.0, math.log(lb / epsilon))


def _log_ground(ground: int) -> float:
    return max(1.0, math.log(ground))


def sample_complexity(epsilon: float, delta: float, ell_value: float, ground: int) -> int:
    arg = 4.0 * ell_value * _log_ground(ground) / (delta * epsilon ** 2)
    return max(1, math.ceil((2.0 + epsilon) / (epsilon ** 2 * (1.0 - 3.0 * epsilon)) * math.log(arg)))


def round_bound(epsilon: float, ground: int, ell_value: float) -> float:
    """Worst-case adaptive rounds: ``eps^-2 log(ground) ell^2``."""
    return _log_ground(ground) * ell_value ** 2 / epsilon ** 2


def geometric_grid(lo: float, hi: float, ratio: float) -> list[float]:
    """``hi, hi*r, hi*r^2, ...`` while above ``lo``, then ``lo`` (descending)."""
    if not (0 < lo <= hi) or not math.isfinite(hi):
        raise ValueError(f"need 0 < lo <= hi, got lo={lo}, hi={hi}")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    out, v = [], hi
    while v > lo:
        out.append(v)
        v *= ratio
    out.append(lo)
    return out


def index_grid(cap: int, epsilon: float) -> list[int]:
    """Prefix lengths ``ceil((1 - eps)^-j)`` below ``cap``, plus ``cap``; ascending, unique."""
    if cap < 1:
        return []
    out, j = [], 0
    while True:
        i = math.ceil((1.0 - epsilon) ** (-j) - 1e-12)
        if i >= cap:
            break
        if not out or i != out[-1]:
            out.append(i)
        j += 1
    out.append(cap)
    return out


class PrefixQueryContext:
    """Snapshot of the solution's best-score rows plus a pending link sequence.

    ``marginal(a, i)`` is the gain of ``a`` against the solution together
    with the first ``i`` pending links.  Rows for a document are built by
    overlaying only the pending links into that document and are cached
    per prefix depth, so a query costs one pass over the document's words.
    """

    def __init__(self, problem: _Problem, rows, linked, pending=()):
        self.problem = problem
        self.rows = list(rows)
        self.linked = linked
        self.pending = [Link(int(t), int(d)) for t, d in pending]
        self._pos: dict[int, list[int]] = {}
        self._topics: dict[int, list[int]] = {}
        for pos, (t, d) in enumerate(self.pending):
            self._pos.setdefault(d, []).append(pos)
            self._topics.setdefault(d, []).append(t)
        self._cache: dict[int, list[np.ndarray]] = {}

    def row(self, d: int, i: int | None = None) -> np.ndarray:
        """Best-score row of ``d`` under the solution plus the first ``i`` pending links."""
        pos = self._pos.get(d)
        if not pos:
            return self.rows[d]
        j = len(pos) if i is None else bisect.bisect_left(pos, i)
        chain = self._cache.setdefault(d, [self.rows[d]])
        while len(chain) <= j:
            t = self._topics[d][len(chain) - 1]
            chain.append(np.maximum(chain[-1], self.problem.weighted_row(d, t)))
        return chain[j]

    def in_prefix(self, a: Link, i: int | None = None) -> bool:
        t, d = a
        if t in self.linked[d]:
            return True
        pos = self._pos.get(d, [])
        topics = self._topics.get(d, [])
        j = len(pos) if i is None else bisect.bisect_left(pos, i)
        return t in topics[:j]

    def marginal(self, a, i: int | None = None) -> float:
        a = Link(int(a[0]), int(a[1]))
        if self.in_prefix(a, i):
            return 0.0
        return exact_gain(self.problem.weighted_row(a.doc, a.topic), self.row(a.doc, i))


def simulated_marginal(ctx: PrefixQueryContext, a) -> float:
    """Gain of ``a`` against the context's solution plus all pending links."""
    return ctx.marginal(a)


class _Solution:
    """Mutable link set with per-document best-score rows."""

    def __init__(self, problem: _Problem, log_p: float):
        self.problem = problem
        self.rows = [c * log_p for c in problem.counts]
        self.linked = [set() for _ in range(problem.num_docs)]
        self.links, self.marginals, self.trace = [], [], []
        self.acc = RunningSum()

    def __len__(self):
        return len(self.links)

    @property
    def value(self) -> float:
        return self.trace[-1] if self.trace else 0.0

    def has(self, flat: int) -> bool:
        d, t = divmod(flat, self.problem.num_topics)
        return t in self.linked[d]

    def add(self, flat: int) -> None:
        d, t = divmod(flat, self.problem.num_topics)
        x = self.problem.weighted_row(d, t)
        gain = exact_gain(x, self.rows[d])
        self.rows[d] = np.maximum(self.rows[d], x)
        self.linked[d].add(t)
        self.links.append(Link(t, d))
        self.marginals.append(gain)
        self.trace.append(self.acc.add(gain))

    def context(self, seq_flat=()) -> PrefixQueryContext:
        k = self.problem.num_topics
        return PrefixQueryContext(self.problem, self.rows, [set(s) for s in self.linked],
                                  [(f % k, f // k) for f in seq_flat])


def _above_threshold(sol: _Solution, flats: list[int], t_hat: float) -> list[bool]:
    """Whether each link's gain against ``sol`` reaches ``t_hat``.

    Gains are screened with vectorised row sums; anything within rounding
    distance of the threshold is re-decided with the exact gain.
    """
    prob, k = sol.problem, sol.problem.num_topics
    by_doc: dict[int, list[tuple[int, int]]] = {}
    for j, f in enumerate(flats):
        by_doc.setdefault(f // k, []).append((j, f % k))
    out = [False] * len(flats)
    for d, items in by_doc.items():
        ts = [t for _, t in items]
        g = block_gains(prob.weighted(d, ts), sol.rows[d])
        for (j, t), v in zip(items, g.tolist()):
            if abs(v - t_hat) <= 1e-9 * max(1.0, abs(v), abs(t_hat)):
                v = exact_gain(prob.weighted_row(d, t), sol.rows[d])
            out[j] = v >= t_hat
    return out


class _Counters:
    def __init__(self):
        self.rounds = 0
        self.queries = 0


def _run_fast(v: float, prob: _Problem, log_p: float, budget: int, cfg: FastConfig,
              rng: np.random.Generator, m: int, counters: _Counters) -> tuple[_Solution, dict]:
    eps = cfg.epsilon
    k = prob.num_topics
    ground = k * prob.num_docs
    sol = _Solution(prob, log_p)
    flags = {"iteration_cap_hit": False}
    for _ in range(math.ceil(1.0 / eps - 1e-12)):
        if len(sol) >= budget:
            break
        X = [f for f in range(ground) if not sol.has(f)]
        t_hat = (1.0 - eps) * (v - sol.value) / budget
        inner = 0
        while X and len(sol) < budget:
            inner += 1
            if inner > cfg.max_inner_iterations:
                flags["iteration_cap_hit"] = True
                logger.warning("FAST inner loop hit its iteration cap at v=%g", v)
                break
            seq = rng.permutation(np.asarray(X)).tolist()
            # Sequence pass: a_i is judged against E + a_1..a_{i-1}.
            ctx = sol.context(seq)
            counters.rounds += 1
            picked = []
            for i, f in enumerate(seq):
                counters.queries += 1
                if ctx.marginal((f % k, f // k), i) >= t_hat:
                    picked.append(f)
                    if len(sol) + len(picked) >= budget:
                        break
            for f in picked:
                sol.add(f)
            X = [f for f in X if not sol.has(f)]
            if not X or len(sol) >= budget:
                break
            counters.rounds += 1
            counters.queries += len(X)
            keep = _above_threshold(sol, X, t_hat)
            X0 = [f for f, ok in zip(X, keep) if ok]
            if len(X0) <= (1.0 - eps) * len(X):
                X = X0
                continue
            draws = rng.integers(0, len(X), size=m)
            uniq, mult = np.unique(draws, return_counts=True)
            sample = [X[u] for u in uniq.tolist()]
            mult = mult.tolist()
            grid = index_grid(min(budget - len(sol), len(X)), eps)
            ctx = sol.context(seq)
            need = (1.0 - 2.0 * eps) * m

            def enough(i):
                counters.rounds += 1
                counters.queries += len(sample)
                hits = sum(c for f, c in zip(sample, mult) if ctx.marginal((f % k, f // k), i - 1) >= t_hat)
                return hits >= need

            lo_i, hi_i, i_star = 0, len(grid) - 1, 0
            while lo_i <= hi_i:
                mid = (lo_i + hi_i) // 2
                if enough(grid[mid]):
                    i_star, lo_i = grid[mid], mid + 1
                else:
                    hi_i = mid - 1
            for f in seq[:i_star]:
                if len(sol) >= budget:
                    break
                if not sol.has(f):
                    sol.add(f)
            X = [f for f in X if not sol.has(f)]
    flags["filled"] = len(sol) == budget
    return sol, flags


def _sample_m(cfg: FastConfig, budget: int, ground: int) -> tuple[int, float]:
    l_val = ell(budget, cfg.epsilon)
    m = cfg.sample_m if cfg.sample_m is not None else sample_complexity(cfg.epsilon, cfg.delta, l_val, ground)
    return m, l_val


def _seed_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed & (2 ** 64 - 1), index])


def fast_inner(v: float, corpus: Corpus, topics, cfg: FastConfig, placeholder=None,
               rng: np.random.Generator | None = None) -> LinkSolution:
    """Run FAST for one guess ``v`` of the optimum."""
    if not v > 0:
        raise ValueError("the guess v must be positive")
    prob = _Problem(corpus, topics)
    log_p = resolve_log_p(placeholder, topics, corpus)
    budget = link_budget(cfg.kappa, prob.num_docs, prob.num_topics, cover=False)
    ground = prob.num_topics * prob.num_docs
    m, l_val = _sample_m(cfg, budget, ground)
    counters = _Counters()
    sol, flags = _run_fast(v, prob, log_p, budget, cfg, rng or _seed_rng(cfg.seed, 0), m, counters)
    meta = {"algorithm": "fast-inner", "v": v, "budget": budget, "adaptive_rounds": counters.rounds,
            "queries": counters.queries, "sample_m": m, "ell": l_val, **flags}
    return LinkSolution(sol.links, sol.marginals, sol.trace, log_p, meta)


def singleton_values(prob: _Problem, log_p: float, corpus: Corpus) -> np.ndarray:
    """``fdot`` of every single link, shape ``(|D|, |Phi|)``."""
    base = np.array([float((c * log_p).sum()) for c in prob.counts])
    return np.asarray(corpus.counts_matrix @ prob.scores.T) - base[:, None]


def fast_full(corpus: Corpus, topics, cfg: FastConfig, placeholder=None) -> LinkSolution:
    """Binary-search a geometric grid of optimum guesses for the largest one
    whose FAST solution certifies ``fdot(E) >= (1 - 1/e) v``."""
    prob = _Problem(corpus, topics)
    log_p = resolve_log_p(placeholder, topics, corpus)
    budget = link_budget(cfg.kappa, prob.num_docs, prob.num_topics, cover=False)
    ground = prob.num_topics * prob.num_docs
    m, l_val = _sample_m(cfg, budget, ground)
    counters = _Counters()
    single = singleton_values(prob, log_p, corpus).ravel()
    counters.rounds += 1
    counters.queries += ground
    top = np.sort(single)[::-1][:budget]
    lo, hi = float(top[0]), math.fsum(top.tolist())
    grid = geometric_grid(lo, hi, 1.0 - cfg.epsilon)[::-1]
    best, tried = None, []
    a, b = 0, len(grid) - 1
    while a <= b:
        mid = (a + b) // 2
        v = grid[mid]
        sol, flags = _run_fast(v, prob, log_p, budget, cfg, _seed_rng(cfg.seed, mid), m, counters)
        ok = sol.value >= CERT_RATIO * v
        tried.append({"v": v, "objective": sol.value, "certified": ok, "links": len(sol)})
        if ok:
            best, a = (v, sol, flags), mid + 1
        else:
            b = mid - 1
    if best is None:
        raise CertificationError(f"no guess in [{lo:g}, {hi:g}] certified (1 - 1/e) v")
    v_star, sol, flags = best
    bound = round_bound(cfg.epsilon, ground, l_val)
    if counters.rounds > bound:
        logger.warning("adaptive rounds %d exceed the bound %.1f", counters.rounds, bound)
    meta = {"algorithm": "fast", "kappa": cfg.kappa, "budget": budget, "epsilon": cfg.epsilon,
            "delta": cfg.delta, "seed": cfg.seed, "adaptive_rounds": counters.rounds,
            "queries": counters.queries, "v_star": v_star, "certified": True, "sample_m": m,
            "ell": l_val, "round_bound": bound, "grid_size": len(grid), "guesses": tried, **flags}
    return LinkSolution(sol.links, sol.marginals, sol.trace, log_p, meta)
