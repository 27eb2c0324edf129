"""Candidate topic sets: keyword-labelled generators and import/export.

Every generated topic is "about" one keyword ``w*``: it spreads mass over
the vocabulary according to a strictly increasing function of how many
documents contain both ``w*`` and each word.  Rows are stored as log
probabilities and computed in log space, so the co-occurrence generator
never overflows even when co-counts run into the thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ._parallel import map_ordered
from .corpus import Corpus, co_doc_count_block, doc_frequencies
from .errors import DimensionMismatchError, FormatError, NormalizationError

MODES = ("umass", "exp_umass", "cooccurrence")
DEFAULT_EPSILON = {"umass": 0.01, "exp_umass": 0.01, "cooccurrence": 1e-12}
TOPICS_MAGIC = "ELDA-TOPICS"
IMPORT_FLOOR = math.log(1e-12)
NORM_TOL = 1e-6


@dataclass(frozen=True)
class TopicMatrix:
    """Labelled rows of log word probabilities.

    ``popularity_logweights`` holds unnormalised log topic weights (only
    the co-occurrence generator sets them).  When present, solvers use
    :attr:`scores` = log(theta * phi) instead of the plain log probabilities.
    """

    labels: tuple
    log_probs: np.ndarray
    popularity_logweights: np.ndarray | None = None

    def __post_init__(self):
        lp = np.ascontiguousarray(self.log_probs, dtype=np.float64)
        if lp.ndim != 2 or lp.shape[0] < 1:
            raise ValueError("log_probs must be a non-empty 2-d array")
        if len(self.labels) != lp.shape[0]:
            raise ValueError("one label per topic row is required")
        if not np.all(np.isfinite(lp)):
            raise ValueError("topic log probabilities must be finite")
        lp.setflags(write=False)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "log_probs", lp)
        if self.popularity_logweights is not None:
            pw = np.asarray(self.popularity_logweights, dtype=np.float64)
            if pw.shape != (lp.shape[0],):
                raise ValueError("popularity_logweights needs one entry per topic")
            object.__setattr__(self, "popularity_logweights", pw)

    @property
    def num_topics(self) -> int:
        return self.log_probs.shape[0]

    @property
    def num_words(self) -> int:
        return self.log_probs.shape[1]

    @property
    def log_theta(self) -> np.ndarray | None:
        if self.popularity_logweights is None:
            return None
        pw = self.popularity_logweights
        return pw - logsumexp(pw)

    @property
    def scores(self) -> np.ndarray:
        """Per-(topic, word) log score maximised by the solvers."""
        lt = self.log_theta
        if lt is None:
            return self.log_probs
        s = self.log_probs + lt[:, None]
        s.setflags(write=False)
        return s

    def uniform(self) -> "TopicMatrix":
        """Same topics with the popularity prior dropped (uniform theta)."""
        return TopicMatrix(self.labels, self.log_probs)

    def row_sums(self) -> np.ndarray:
        return np.exp(logsumexp(self.log_probs, axis=1))


def as_scores(topics) -> np.ndarray:
    """Solver score matrix from a :class:`TopicMatrix` or a raw 2-d array."""
    if isinstance(topics, TopicMatrix):
        return topics.scores
    s = np.asarray(topics, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError("topic scores must be a 2-d array")
    return s


@dataclass(frozen=True)
class GeneratorConfig:
    mode: str = "exp_umass"
    epsilon: float | None = None
    keywords: Sequence[str] | None = None  # None -> every vocabulary word

    def __post_init__(self):
        mode = self.mode.replace("-", "_")
        if mode not in MODES:
            raise ValueError(f"unknown generator {self.mode!r}; choose from {', '.join(MODES)}")
        object.__setattr__(self, "mode", mode)
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def eps(self) -> float:
        return DEFAULT_EPSILON[self.mode] if self.epsilon is None else float(self.epsilon)


def _rows_from_cocounts(co: np.ndarray, df_star: np.ndarray, mode: str, eps: float):
    """Log-probability rows (and log popularity) from a block of co-counts."""
    co = co.astype(np.float64)
    if mode == "umass":
        s = np.log((co + eps) / df_star[:, None])
    elif mode == "exp_umass":
        s = (co + eps) / df_star[:, None]
    else:
        s = co + eps
    lse = logsumexp(s, axis=1)
    rows = s - lse[:, None]
    pop = lse if mode == "cooccurrence" else None
    return rows, pop


def gen_topic(corpus: Corpus, w_star: int, cfg: GeneratorConfig) -> tuple[np.ndarray, float | None]:
    """One topic row about word ``w_star``; second item is its log popularity
    weight in co-occurrence mode and ``None`` otherwise."""
    if not 0 <= w_star < corpus.num_words:
        raise IndexError(f"word id {w_star} out of range for |V|={corpus.num_words}")
    co = co_doc_count_block(corpus, [w_star])
    df = doc_frequencies(corpus)[[w_star]].astype(np.float64)
    rows, pop = _rows_from_cocounts(co, df, cfg.mode, cfg.eps)
    return rows[0], (None if pop is None else float(pop[0]))


def _keyword_ids(corpus: Corpus, cfg: GeneratorConfig) -> list[int]:
    if cfg.keywords is None:
        return list(range(corpus.num_words))
    index = corpus.word_index
    missing = [k for k in cfg.keywords if k not in index]
    if missing:
        raise KeyError(f"keywords not in vocabulary: {', '.join(missing[:10])}")
    ids = sorted({index[k] for k in cfg.keywords})
    if not ids:
        raise ValueError("keyword set is empty")
    return ids


def build_candidate_set(corpus: Corpus, cfg: GeneratorConfig | None = None,
                        chunk_size: int = 512, threads: int | None = None) -> TopicMatrix:
    """Generate one topic per keyword, rows in vocabulary-id order."""
    cfg = cfg or GeneratorConfig()
    ids = _keyword_ids(corpus, cfg)
    df = doc_frequencies(corpus).astype(np.float64)
    chunks = [ids[i:i + chunk_size] for i in range(0, len(ids), chunk_size)]

    def work(chunk):
        co = co_doc_count_block(corpus, chunk)
        return _rows_from_cocounts(co, df[chunk], cfg.mode, cfg.eps)

    parts = map_ordered(work, chunks, threads=threads)
    rows = np.vstack([r for r, _ in parts])
    pop = None
    if cfg.mode == "cooccurrence":
        pop = np.concatenate([p for _, p in parts])
    return TopicMatrix(tuple(corpus.vocab[i] for i in ids), rows, pop)


# -- ELDA-TOPICS format ------------------------------------------------------

def export_topics(topics: TopicMatrix, path) -> None:
    out = [f"{TOPICS_MAGIC} 1 {topics.num_topics} {topics.num_words}"]
    for label, row in zip(topics.labels, topics.log_probs):
        if not label or any(c in label for c in "\t\r\n"):
            raise FormatError(f"topic label {label!r} cannot be written")
        out.append(label + "\t" + "\t".join(map(repr, row.tolist())))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    side = popularity_path(path)
    if topics.popularity_logweights is not None:
        side.write_text("".join(f"{x!r}\n" for x in topics.popularity_logweights.tolist()), encoding="utf-8")
    elif side.exists():
        side.unlink()


def popularity_path(path) -> Path:
    """Sidecar holding one log popularity weight per topic, if the topics have them."""
    return Path(str(path) + ".popularity")


def import_topics(path, vocab_size: int | None = None, popularity: bool = True) -> TopicMatrix:
    """Read an ELDA-TOPICS file.

    Rows must exponentiate to 1 within 1e-6.  Zero-probability (``-inf``)
    entries are floored to log(1e-12) and the row renormalised.  With
    ``popularity`` the ``.popularity`` sidecar is loaded when present.
    """
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != TOPICS_MAGIC or head[1] != "1":
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    n_topics, n_words = int(head[2]), int(head[3])
    if vocab_size is not None and vocab_size != n_words:
        raise DimensionMismatchError(f"{path}: topics cover {n_words} words, vocabulary has {vocab_size}")
    if len(lines) - 1 != n_topics:
        raise FormatError(f"{path}: header says {n_topics} topics, found {len(lines) - 1}")
    labels, rows = [], np.empty((n_topics, n_words))
    for k, ln in enumerate(lines[1:]):
        cells = ln.split("\t")
        if len(cells) != n_words + 1:
            raise DimensionMismatchError(f"{path}: topic row {k} has {len(cells) - 1} entries, expected {n_words}")
        labels.append(cells[0])
        try:
            rows[k] = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise FormatError(f"{path}: topic row {k}: {exc}") from None
    if np.any(np.isnan(rows)) or np.any(rows == np.inf):
        raise FormatError(f"{path}: NaN or +inf log probability")
    totals = np.exp(logsumexp(rows, axis=1))
    for k, t in enumerate(totals):
        if abs(t - 1.0) > NORM_TOL:
            raise NormalizationError(k, float(t))
    zero = np.exp(rows) == 0.0
    if zero.any():
        hit = zero.any(axis=1)
        rows[zero] = IMPORT_FLOOR
        rows[hit] -= logsumexp(rows[hit], axis=1)[:, None]
    pop = None
    side = popularity_path(path)
    if popularity and side.exists():
        try:
            pop = np.array([float(x) for x in side.read_text(encoding="utf-8").split()])
        except ValueError as exc:
            raise FormatError(f"{side}: {exc}") from None
        if pop.shape != (n_topics,) or not np.all(np.isfinite(pop)):
            raise FormatError(f"{side}: expected {n_topics} finite popularity weights")
    return TopicMatrix(tuple(labels), rows, pop)
