"""Out-of-sample inference, one held-out document at a time.

The objective decomposes over documents, so a held-out document can be
fitted against fixed topics without looking at any other document.  Each
request runs the serial greedy solver on a one-document corpus with budget
``kappa_d``; results are therefore a pure function of the document, the
topics, ``kappa_d`` and the placeholder, whatever else is in the batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

from ._parallel import map_ordered
from .corpus import Corpus, DocRow, TokenizerConfig, vectorize
from .errors import BudgetError, EmptyCorpusError
from .greedy import SolverConfig, fast_greedy
from .objective import Assignment, LinkSolution, assignment_from_links
from .topics import as_scores


@dataclass(frozen=True)
class OosRequest:
    doc: DocRow
    kappa_d: int
    doc_id: str = ""
    oov_dropped: int = 0

    def __post_init__(self):
        if int(self.kappa_d) != self.kappa_d or self.kappa_d < 1:
            raise BudgetError(f"kappa_d must be a positive integer, got {self.kappa_d!r}")
        if self.doc is None or self.doc.length == 0:
            raise EmptyCorpusError(f"document {self.doc_id!r} is empty after vocabulary projection")


class OosResult(NamedTuple):
    topics: list
    assignment: Assignment
    trace: list


def _single_corpus(req: OosRequest, num_words: int) -> Corpus:
    vocab = tuple(str(i) for i in range(num_words))
    return Corpus(vocab, (req.doc,), (req.doc_id or "doc",))


def infer_out_of_sample(req: OosRequest, topics, placeholder=None) -> OosResult:
    """Greedy topic selection for one document under budget ``kappa_d``.

    Returns the linked topics in greedy order, the document's word-topic
    assignment and the objective after each added topic.
    """
    scores = as_scores(topics)
    k = scores.shape[0]
    if req.kappa_d > k:
        raise BudgetError(f"kappa_d = {req.kappa_d} exceeds the {k} candidate topics")
    corpus = _single_corpus(req, scores.shape[1])
    sol: LinkSolution = fast_greedy(corpus, topics, SolverConfig(kappa=req.kappa_d), placeholder)
    linked = [t for t, _ in sol.links]
    return OosResult(linked, assignment_from_links(sol.links, corpus, topics), list(sol.objective_trace))


def infer_batch(requests: Sequence[OosRequest], topics, placeholder=None, threads: int | None = None) -> list[OosResult]:
    """Independent :func:`infer_out_of_sample` calls, results in request order."""
    return map_ordered(lambda r: infer_out_of_sample(r, topics, placeholder), requests, threads=threads)


def requests_from_records(records, vocab: Sequence[str], cfg: TokenizerConfig | None = None,
                          default_kappa_d: int | None = None) -> list[OosRequest]:
    """Build requests from ``{"id", "text" | "tokens", "kappa_d"}`` records.

    Out-of-vocabulary tokens are dropped and counted on each request.
    """
    index = {w: i for i, w in enumerate(vocab)}
    out = []
    for rec in records:
        doc_id = str(rec["id"])
        payload = rec["tokens"] if "tokens" in rec else rec["text"]
        row, oov = vectorize(payload, index, cfg, doc_id)
        kappa_d = rec.get("kappa_d", default_kappa_d)
        if kappa_d is None:
            raise BudgetError(f"record {doc_id!r} has no kappa_d and no default was given")
        if row is None:
            raise EmptyCorpusError(f"document {doc_id!r} is empty after vocabulary projection "
                                   f"({oov} out-of-vocabulary tokens dropped)")
        out.append(OosRequest(row, int(kappa_d), doc_id, oov))
    return out


def link_count_table(solution: LinkSolution, corpus: Corpus) -> list[dict]:
    """Per training document: length and number of linked topics.

    Useful for fitting a predictor of ``kappa_d`` from document length.
    """
    counts = [0] * corpus.num_docs
    for _, d in solution.links:
        counts[d] += 1
    return [{"id": i, "length": int(n), "links": c}
            for i, n, c in zip(corpus.doc_ids, corpus.lengths.tolist(), counts)]


__all__ = ["OosRequest", "OosResult", "infer_out_of_sample", "infer_batch", "requests_from_records",
           "link_count_table"]
