"""JSON-lines artifacts for solutions and assignments.

Solution file, one record per added link in solver order::

    {"step": 1, "doc": "d3", "topic": "physics", "marginal": 12.5, "objective": 12.5}

with solver metadata in a ``<path>.meta.json`` sidecar.  Assignment file,
one record per document::

    {"id": "d3", "linked": ["physics", "energy"], "assignment": [["atom", "physics"], ...]}

Readers validate every record and raise :class:`~elda.errors.FormatError`
rather than returning partial data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import FormatError
from .objective import Assignment, Link, LinkSolution


def _unique_index(names, what: str) -> dict:
    index = {}
    for i, n in enumerate(names):
        if n in index:
            raise FormatError(f"{what} {n!r} is not unique")
        index[n] = i
    return index


def meta_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False, sort_keys=False)


def write_solution(solution: LinkSolution, corpus: Corpus, labels, path) -> None:
    _unique_index(labels, "topic label")
    lines = []
    for step, ((t, d), m, obj) in enumerate(zip(solution.links, solution.marginals, solution.objective_trace), 1):
        lines.append(dumps_record({"step": step, "doc": corpus.doc_ids[d], "topic": labels[t],
                                   "marginal": float(m), "objective": float(obj)}))
    Path(path).write_text("".join(x + "\n" for x in lines), encoding="utf-8")
    meta = {"log_p": solution.log_p, **solution.meta}
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _records(path):
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise FormatError(f"{path}:{lineno}: expected a JSON object")
        yield lineno, rec


def read_solution(path, corpus: Corpus, labels) -> LinkSolution:
    doc_index = _unique_index(corpus.doc_ids, "document id")
    topic_index = _unique_index(labels, "topic label")
    links, marginals, trace = [], [], []
    for lineno, rec in _records(path):
        try:
            step, doc, topic = rec["step"], rec["doc"], rec["topic"]
            m, obj = float(rec["marginal"]), float(rec["objective"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad solution record ({exc})") from None
        if step != len(links) + 1:
            raise FormatError(f"{path}:{lineno}: expected step {len(links) + 1}, found {step}")
        if doc not in doc_index:
            raise FormatError(f"{path}:{lineno}: unknown document {doc!r}")
        if topic not in topic_index:
            raise FormatError(f"{path}:{lineno}: unknown topic {topic!r}")
        links.append(Link(topic_index[topic], doc_index[doc]))
        marginals.append(m)
        trace.append(obj)
    if len(set(links)) != len(links):
        raise FormatError(f"{path}: duplicate link")
    mp = meta_path(path)
    meta = json.loads(mp.read_text(encoding="utf-8")) if mp.exists() else {}
    log_p = float(meta.pop("log_p", float("nan")))
    return LinkSolution(links, marginals, trace, log_p, meta)


def assignment_records(assign: Assignment, corpus: Corpus, labels, extra=None) -> list[dict]:
    out = []
    for d, (row, z) in enumerate(zip(corpus.docs, assign.tokens)):
        z = np.asarray(z)
        starts = np.concatenate(([0], np.cumsum(row.counts)[:-1]))
        per_word = [[corpus.vocab[w], labels[t]] for w, t in zip(row.word_ids.tolist(), z[starts].tolist())]
        rec = {"id": corpus.doc_ids[d]}
        if assign.linked is not None:
            rec["linked"] = [labels[t] for t in assign.linked[d]]
        uniform = all(np.all(z[s:s + c] == z[s]) for s, c in zip(starts.tolist(), row.counts.tolist()))
        rec["assignment"] = per_word
        if not uniform:
            rec["tokens"] = [labels[t] for t in z.tolist()]
        if extra is not None:
            rec.update(extra[d])
        out.append(rec)
    return out


def write_assignment(assign: Assignment, corpus: Corpus, labels, path, extra=None) -> None:
    recs = assignment_records(assign, corpus, labels, extra)
    Path(path).write_text("".join(dumps_record(r) + "\n" for r in recs), encoding="utf-8")


def read_assignment(path, corpus: Corpus, labels) -> Assignment:
    """Read an assignment file covering every document of ``corpus`` in order.

    A record's optional ``tokens`` list (one label per token, word ids
    ascending) overrides its per-word ``assignment``.
    """
    topic_index = _unique_index(labels, "topic label")
    recs = list(_records(path))
    if len(recs) != corpus.num_docs:
        raise FormatError(f"{path}: {len(recs)} records for {corpus.num_docs} documents")
    tokens, linked = [], []
    for (lineno, rec), doc_id, row in zip(recs, corpus.doc_ids, corpus.docs):
        if rec.get("id") != doc_id:
            raise FormatError(f"{path}:{lineno}: expected document {doc_id!r}, found {rec.get('id')!r}")
        try:
            if "tokens" in rec:
                z = [topic_index[t] for t in rec["tokens"]]
            else:
                by_word = {w: topic_index[t] for w, t in rec["assignment"]}
                z = np.repeat([by_word[corpus.vocab[w]] for w in row.word_ids.tolist()], row.counts).tolist()
            linked.append([topic_index[t] for t in rec.get("linked", [])])
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: unknown word or topic {exc}") from None
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad assignment record ({exc})") from None
        if len(z) != row.length:
            raise FormatError(f"{path}:{lineno}: {len(z)} token topics for a document of {row.length} tokens")
        tokens.append(np.asarray(z, dtype=np.int64))
    return Assignment(tokens, linked)
