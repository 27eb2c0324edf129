"""Corpus ingestion, vocabulary and document-frequency statistics.

A :class:`Corpus` is an immutable bag-of-words view of a document
collection: an ordered vocabulary plus one sparse :class:`DocRow` per
document.  Word ids follow first-occurrence order so that ingestion is
deterministic for a given input order.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import quote, unquote

import numpy as np
import scipy.sparse as sp

from .errors import EmptyCorpusError, FormatError, MalformedInputError

logger = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"[^\W_]+")
CORPUS_MAGIC = "ELDA-CORPUS"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class DocRow:
    """Sparse word counts of one document, word ids ascending."""

    word_ids: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.word_ids, dtype=np.int64)
        cnt = np.asarray(self.counts, dtype=np.int64)
        if ids.ndim != 1 or ids.shape != cnt.shape:
            raise ValueError("word_ids and counts must be 1-d and equal length")
        if ids.size == 0:
            raise ValueError("a DocRow needs at least one word")
        if np.any(cnt <= 0):
            raise ValueError("counts must be positive integers")
        order = np.argsort(ids, kind="stable")
        ids, cnt = ids[order], cnt[order]
        if np.any(np.diff(ids) == 0):
            raise ValueError("duplicate word id in DocRow")
        object.__setattr__(self, "word_ids", ids)
        object.__setattr__(self, "counts", cnt)

    @classmethod
    def from_counts(cls, entries: dict[int, int]) -> "DocRow":
        ids = sorted(entries)
        return cls(np.array(ids, dtype=np.int64), np.array([entries[i] for i in ids], dtype=np.int64))

    @property
    def length(self) -> int:
        return int(self.counts.sum())

    @property
    def entries(self) -> dict[int, int]:
        return dict(zip(self.word_ids.tolist(), self.counts.tolist()))

    def tokens(self) -> np.ndarray:
        """Word id of every token position, in canonical (ascending id) order."""
        return np.repeat(self.word_ids, self.counts)

    def __eq__(self, other):
        if not isinstance(other, DocRow):
            return NotImplemented
        return np.array_equal(self.word_ids, other.word_ids) and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.word_ids.tobytes(), self.counts.tobytes()))


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    stopword_file: str | None = None
    stopwords: frozenset = frozenset()
    min_doc_freq: int = 1
    max_doc_freq_fraction: float = 1.0

    def __post_init__(self):
        if self.min_doc_freq < 1:
            raise ValueError("min_doc_freq must be >= 1")
        if not 0.0 < self.max_doc_freq_fraction <= 1.0:
            raise ValueError("max_doc_freq_fraction must lie in (0, 1]")

    def all_stopwords(self) -> frozenset:
        words = set(self.stopwords)
        if self.stopword_file:
            text = Path(self.stopword_file).read_text(encoding="utf-8")
            words.update(w.strip() for w in text.splitlines() if w.strip())
        if self.lowercase:
            words = {w.lower() for w in words}
        return frozenset(words)


@dataclass(frozen=True)
class Corpus:
    vocab: tuple
    docs: tuple
    doc_ids: tuple
    dropped_ids: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vocab", tuple(self.vocab))
        object.__setattr__(self, "docs", tuple(self.docs))
        object.__setattr__(self, "doc_ids", tuple(str(i) for i in self.doc_ids))
        object.__setattr__(self, "dropped_ids", tuple(self.dropped_ids))
        if len(self.docs) != len(self.doc_ids):
            raise ValueError("docs and doc_ids differ in length")
        if not self.docs:
            raise EmptyCorpusError("empty corpus")
        nv = len(self.vocab)
        for d, row in enumerate(self.docs):
            if row.word_ids[-1] >= nv:
                raise ValueError(f"document {d} references word id {row.word_ids[-1]} >= |V|={nv}")

    @classmethod
    def from_counts(cls, vocab: Sequence[str], rows: Sequence[dict[int, int]], doc_ids=None) -> "Corpus":
        """Build directly from ``{word_id: count}`` mappings (tests, synthetic data)."""
        docs = [DocRow.from_counts(r) for r in rows]
        if doc_ids is None:
            doc_ids = [f"d{i + 1}" for i in range(len(docs))]
        return cls(tuple(vocab), tuple(docs), tuple(doc_ids))

    @property
    def num_docs(self) -> int:
        return len(self.docs)

    @property
    def num_words(self) -> int:
        return len(self.vocab)

    @cached_property
    def word_index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.vocab)}

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([row.length for row in self.docs], dtype=np.int64)

    @cached_property
    def counts_matrix(self) -> sp.csr_matrix:
        """|D| x |V| sparse matrix of word counts."""
        indptr = np.zeros(self.num_docs + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([row.word_ids.size for row in self.docs])
        indices = np.concatenate([row.word_ids for row in self.docs])
        data = np.concatenate([row.counts for row in self.docs]).astype(np.float64)
        return sp.csr_matrix((data, indices, indptr), shape=(self.num_docs, self.num_words))

    @cached_property
    def incidence(self) -> sp.csc_matrix:
        """|D| x |V| binary document-word incidence, column-compressed."""
        m = self.counts_matrix.copy()
        m.data[:] = 1.0
        return m.tocsc()


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    if lowercase:
        text = text.lower()
    return TOKEN_RE.findall(text)


def _decode(doc_id, text):
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInputError(f"document {doc_id!r}: undecodable text ({exc})") from None
    if isinstance(text, str):
        return text
    raise MalformedInputError(f"document {doc_id!r}: text must be a string or a token list")


def _doc_tokens(doc_id, payload, cfg: TokenizerConfig, stop: frozenset) -> list[str]:
    if isinstance(payload, (list, tuple)):
        if not all(isinstance(t, str) for t in payload):
            raise MalformedInputError(f"document {doc_id!r}: tokens must be strings")
        toks = list(payload)
    else:
        toks = tokenize(_decode(doc_id, payload), cfg.lowercase)
    return [t for t in toks if t not in stop]


def ingest(raw_docs: Iterable[tuple], cfg: TokenizerConfig | None = None) -> Corpus:
    """Tokenize ``(id, text)`` pairs into a :class:`Corpus`.

    ``text`` may also be a list of tokens, which skips tokenization (and
    lowercasing) but still goes through stopword and frequency filtering.
    Words outside ``[min_doc_freq, max_doc_freq_fraction * n_docs]`` are
    removed before ids are assigned; documents left empty are dropped and
    listed in ``Corpus.dropped_ids``.
    """
    cfg = cfg or TokenizerConfig()
    stop = cfg.all_stopwords()
    tokenized = []
    for doc_id, payload in raw_docs:
        tokenized.append((str(doc_id), _doc_tokens(doc_id, payload, cfg, stop)))
    if not tokenized:
        raise EmptyCorpusError("empty corpus")

    df = Counter()
    for _, toks in tokenized:
        df.update(set(toks))
    max_df = cfg.max_doc_freq_fraction * len(tokenized)
    keep = {w for w, n in df.items() if n >= cfg.min_doc_freq and n <= max_df}

    vocab: dict[str, int] = {}
    docs, ids, dropped = [], [], []
    for doc_id, toks in tokenized:
        counts = Counter()
        for t in toks:
            if t in keep:
                counts[vocab.setdefault(t, len(vocab))] += 1
        if not counts:
            dropped.append(doc_id)
            continue
        docs.append(DocRow.from_counts(counts))
        ids.append(doc_id)
    if dropped:
        logger.warning("dropped %d document(s) with no surviving tokens: %s", len(dropped), ", ".join(dropped[:10]))
    if not docs:
        raise EmptyCorpusError("empty corpus: no document has a token left after filtering")
    return Corpus(tuple(vocab), tuple(docs), tuple(ids), tuple(dropped))


def vectorize(payload, vocab_index: dict[str, int], cfg: TokenizerConfig | None = None,
              doc_id: str = "?") -> tuple[DocRow | None, int]:
    """Project one document onto a fixed vocabulary.

    Returns the row (``None`` when nothing survives) and the number of
    out-of-vocabulary tokens that were dropped.
    """
    cfg = cfg or TokenizerConfig()
    toks = _doc_tokens(doc_id, payload, cfg, cfg.all_stopwords())
    counts = Counter()
    oov = 0
    for t in toks:
        wid = vocab_index.get(t)
        if wid is None:
            oov += 1
        else:
            counts[wid] += 1
    return (DocRow.from_counts(counts) if counts else None), oov


def doc_frequencies(corpus: Corpus) -> np.ndarray:
    """Number of documents containing each word, indexed by word id."""
    return np.asarray(corpus.incidence.sum(axis=0)).ravel().astype(np.int64)


def co_doc_counts(corpus: Corpus, w_star: int) -> np.ndarray:
    """Number of documents containing both ``w_star`` and each word ``v``."""
    if not 0 <= w_star < corpus.num_words:
        raise IndexError(f"word id {w_star} out of range for |V|={corpus.num_words}")
    inc = corpus.incidence
    col = inc[:, w_star]
    return np.asarray((inc.T @ col).todense()).ravel().astype(np.int64)


def co_doc_count_block(corpus: Corpus, w_stars: Sequence[int]) -> np.ndarray:
    """``len(w_stars) x |V|`` block of co-document counts."""
    inc = corpus.incidence
    block = (inc[:, list(w_stars)].T @ inc).toarray()
    return block.astype(np.int64)


# -- file formats -----------------------------------------------------------

def read_jsonl(path) -> list[dict]:
    """Read JSON-lines records; blank lines are skipped."""
    records = []
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInputError(f"{path}: not valid UTF-8 ({exc})") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or "id" not in rec:
            raise MalformedInputError(f"{path}:{lineno}: record needs an 'id' field")
        if ("text" in rec) == ("tokens" in rec):
            raise MalformedInputError(f"{path}:{lineno}: record needs exactly one of 'text' or 'tokens'")
        records.append(rec)
    return records


def records_to_docs(records: Iterable[dict]) -> list[tuple]:
    return [(str(r["id"]), r["tokens"] if "tokens" in r else r["text"]) for r in records]


def write_vocab(vocab: Sequence[str], path) -> None:
    for w in vocab:
        if not w or any(c in w for c in "\r\n"):
            raise FormatError(f"token {w!r} cannot be written to a vocabulary file")
    Path(path).write_text("".join(f"{w}\n" for w in vocab), encoding="utf-8")


def read_vocab(path) -> tuple:
    text = Path(path).read_text(encoding="utf-8")
    return tuple(text.split("\n")[:-1]) if text else ()


def write_corpus(corpus: Corpus, path) -> None:
    lines = [f"{CORPUS_MAGIC} {FORMAT_VERSION} {corpus.num_docs} {corpus.num_words}"]
    for doc_id, row in zip(corpus.doc_ids, corpus.docs):
        cells = " ".join(f"{w}:{c}" for w, c in zip(row.word_ids.tolist(), row.counts.tolist()))
        lines.append(f"{quote(doc_id, safe='')} {cells}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_corpus(path, vocab_path) -> Corpus:
    vocab = read_vocab(vocab_path)
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != CORPUS_MAGIC or head[1] != str(FORMAT_VERSION):
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    n_docs, n_words = int(head[2]), int(head[3])
    if n_words != len(vocab):
        raise FormatError(f"{path}: header says |V|={n_words} but vocabulary has {len(vocab)} words")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n_docs:
        raise FormatError(f"{path}: header says {n_docs} documents, found {len(body)}")
    docs, ids = [], []
    for lineno, ln in enumerate(body, 2):
        parts = ln.split()
        try:
            entries = {}
            for cell in parts[1:]:
                w, c = cell.split(":")
                entries[int(w)] = int(c)
            row = DocRow.from_counts(entries)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        if row.word_ids[-1] >= n_words:
            raise FormatError(f"{path}:{lineno}: word id out of range")
        ids.append(unquote(parts[0]))
        docs.append(row)
    return Corpus(vocab, tuple(docs), tuple(ids))
