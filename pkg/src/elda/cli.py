"""Command-line pipeline: ingest, gen-topics, fit, infer, eval, compare.

Every command writes its artifacts into an output directory together with a
``manifest.json`` recording the configuration, input and output digests,
engine version and wall time.  Exit status is 0 on success, 2 for usage or
validation errors and 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import TokenizerConfig, ingest, read_corpus, read_jsonl, records_to_docs, write_corpus, write_vocab
from .errors import EldaError
from .evaluate import (CoherenceConfig, ReportConfig, compare_assignments, render_table, solution_report,
                       topic_coherences)
from .fast import FastConfig, fast_full
from .formats import read_assignment, read_solution, write_assignment, write_solution, dumps_record
from .greedy import SolverConfig, fast_greedy, simple_greedy
from .ltlg import LtlgConfig, ltlg
from .objective import DEFAULT_LOG_P, PlaceholderConfig, assignment_from_links
from .oos import infer_batch, link_count_table, requests_from_records
from .topics import GeneratorConfig, TopicMatrix, build_candidate_set, export_topics, import_topics

logger = logging.getLogger("elda")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
CORPUS_FILE, VOCAB_FILE, TOPICS_FILE = "corpus.txt", "vocab.txt", "topics.txt"
SOLUTION_FILE, ASSIGNMENT_FILE, MANIFEST_FILE = "solution.jsonl", "assignment.jsonl", "manifest.json"


class UsageError(EldaError, ValueError):
    pass


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunManifest:
    """Provenance record written next to every command's outputs."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []
        self.solver: dict = {}
        self.start = time.perf_counter()

    def add_input(self, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise UsageError(f"input not found: {path}")
        if path.is_file():
            self.inputs[str(path)] = _digest(path)
        return path

    def add_output(self, path) -> Path:
        self.outputs.append(Path(path))
        return Path(path)

    def write(self, out_dir: Path) -> None:
        record = {
            "command": self.command,
            "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in self.config.items()},
            "seed": self.config.get("seed"),
            "inputs": self.inputs,
            "outputs": {str(p): _digest(p) for p in self.outputs if p.is_file()},
            "engine_version": __version__,
            "wall_time_s": round(time.perf_counter() - self.start, 6),
            "solver": self.solver,
        }
        (out_dir / MANIFEST_FILE).write_text(json.dumps(record, indent=2, default=str) + "\n", encoding="utf-8")


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve(path, default_name: str) -> Path:
    path = Path(path)
    return path / default_name if path.is_dir() else path


def _load_corpus(man: RunManifest, corpus_dir):
    corpus_dir = Path(corpus_dir)
    c, v = man.add_input(corpus_dir / CORPUS_FILE), man.add_input(corpus_dir / VOCAB_FILE)
    return read_corpus(c, v)


def _load_topics(man: RunManifest, path, vocab_size: int, theta: str = "auto") -> TopicMatrix:
    path = man.add_input(_resolve(path, TOPICS_FILE))
    topics = import_topics(path, vocab_size=vocab_size)
    if theta == "uniform":
        return topics.uniform()
    if theta == "popularity" and topics.popularity_logweights is None:
        raise UsageError(f"{path} has no popularity weights (only co-occurrence topics carry them)")
    return topics


def _placeholder(args) -> PlaceholderConfig:
    return PlaceholderConfig(log_p=args.placeholder_log_p, auto_lower=not args.fixed_placeholder)


# -- commands -----------------------------------------------------------------

def cmd_ingest(args) -> int:
    man = RunManifest("ingest", args)
    src = man.add_input(args.input)
    cfg = TokenizerConfig(lowercase=not args.no_lowercase, stopword_file=args.stopwords,
                          min_doc_freq=args.min_doc_freq, max_doc_freq_fraction=args.max_doc_freq_fraction)
    if args.stopwords:
        man.add_input(args.stopwords)
    corpus = ingest(records_to_docs(read_jsonl(src)), cfg)
    out = _out_dir(args.out)
    write_corpus(corpus, man.add_output(out / CORPUS_FILE))
    write_vocab(corpus.vocab, man.add_output(out / VOCAB_FILE))
    man.solver = {"num_docs": corpus.num_docs, "num_words": corpus.num_words, "dropped": list(corpus.dropped_ids)}
    man.write(out)
    print(f"ingested {corpus.num_docs} documents, {corpus.num_words} word types -> {out}")
    return EXIT_OK


def cmd_gen_topics(args) -> int:
    man = RunManifest("gen-topics", args)
    corpus = _load_corpus(man, args.corpus)
    keywords = None
    if args.keywords:
        keywords = [w for w in man.add_input(args.keywords).read_text(encoding="utf-8").split() if w]
    cfg = GeneratorConfig(mode=args.generator, epsilon=args.epsilon, keywords=keywords)
    topics = build_candidate_set(corpus, cfg)
    out = _out_dir(args.out)
    export_topics(topics, man.add_output(out / TOPICS_FILE))
    if topics.popularity_logweights is not None:
        man.add_output(out / (TOPICS_FILE + ".popularity"))
    man.solver = {"num_topics": topics.num_topics, "generator": cfg.mode, "epsilon": cfg.eps}
    man.write(out)
    print(f"generated {topics.num_topics} {cfg.mode} topics -> {out / TOPICS_FILE}")
    return EXIT_OK


def _solve(args, corpus, topics):
    ph = _placeholder(args)
    if args.algorithm == "simple":
        return simple_greedy(corpus, topics, args.kappa, ph)
    if args.algorithm == "fastgreedy":
        return fast_greedy(corpus, topics, SolverConfig(kappa=args.kappa), ph)
    if args.algorithm == "ltlg":
        return ltlg(corpus, topics, LtlgConfig(kappa=args.kappa, epsilon=args.epsilon or 0.2, seed=args.seed), ph)
    cfg = FastConfig(kappa=args.kappa, epsilon=args.epsilon or 0.05, delta=args.delta, seed=args.seed,
                     sample_m=args.sample_m)
    return fast_full(corpus, topics, cfg, ph)


def cmd_fit(args) -> int:
    man = RunManifest("fit", args)
    corpus = _load_corpus(man, args.corpus)
    topics = _load_topics(man, args.topics, corpus.num_words, args.theta)
    if args.algorithm in ("simple", "fastgreedy") and args.kappa * corpus.num_docs < corpus.num_docs - 1e-9:
        raise UsageError(f"kappa*|D| < |D| (kappa={args.kappa}, |D|={corpus.num_docs}); every document needs a link")
    sol = _solve(args, corpus, topics)
    out = _out_dir(args.out)
    write_solution(sol, corpus, topics.labels, man.add_output(out / SOLUTION_FILE))
    man.add_output(out / (SOLUTION_FILE + ".meta.json"))
    covered = {d for _, d in sol.links}
    if len(covered) == corpus.num_docs:
        assign = assignment_from_links(sol.links, corpus, topics)
        write_assignment(assign, corpus, topics.labels, man.add_output(out / ASSIGNMENT_FILE))
    else:
        logger.warning("%d documents have no linked topic; assignment not written", corpus.num_docs - len(covered))
    table = out / "link_counts.tsv"
    rows = ["id\tlength\tlinks"] + [f"{r['id']}\t{r['length']}\t{r['links']}" for r in link_count_table(sol, corpus)]
    table.write_text("\n".join(rows) + "\n", encoding="utf-8")
    man.add_output(table)
    if args.sweep:
        rep = solution_report(sol, corpus, topics, ReportConfig(h_stars=tuple(args.hstar), sweep=True))
        path = man.add_output(out / "sweep.json")
        path.write_text(json.dumps(rep["sweep"], indent=2) + "\n", encoding="utf-8")
    man.solver = {k: v for k, v in sol.meta.items() if k != "guesses"}
    man.write(out)
    print(f"{sol.meta.get('algorithm')}: {len(sol.links)} links, objective {sol.objective:.6f} -> {out}")
    return EXIT_OK


def cmd_infer(args) -> int:
    man = RunManifest("infer", args)
    corpus_dir = Path(args.corpus)
    vocab_path = man.add_input(corpus_dir / VOCAB_FILE if corpus_dir.is_dir() else corpus_dir)
    vocab = tuple(vocab_path.read_text(encoding="utf-8").split("\n")[:-1])
    topics = _load_topics(man, args.topics, len(vocab), args.theta)
    records = read_jsonl(man.add_input(args.input))
    reqs = requests_from_records(records, vocab, TokenizerConfig(lowercase=not args.no_lowercase), args.kappa_d)
    results = infer_batch(reqs, topics, _placeholder(args))
    out = _out_dir(args.out)
    path = man.add_output(out / ASSIGNMENT_FILE)
    lines = []
    for req, res in zip(reqs, results):
        wt = {int(w): int(t) for w, t in zip(req.doc.tokens().tolist(), res.assignment.tokens[0].tolist())}
        lines.append(dumps_record({
            "id": req.doc_id,
            "linked": [topics.labels[t] for t in res.topics],
            "assignment": [[vocab[w], topics.labels[t]] for w, t in wt.items()],
            "objective": [float(x) for x in res.trace],
            "oov_dropped": req.oov_dropped,
        }))
    path.write_text("".join(x + "\n" for x in lines), encoding="utf-8")
    total_oov = sum(r.oov_dropped for r in reqs)
    summary = man.add_output(out / "summary.json")
    summary.write_text(json.dumps({"documents": len(reqs), "oov_dropped": total_oov}) + "\n", encoding="utf-8")
    man.solver = {"documents": len(reqs), "oov_dropped": total_oov}
    man.write(out)
    print(f"inferred {len(reqs)} documents ({total_oov} out-of-vocabulary tokens dropped) -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    man = RunManifest("eval", args)
    corpus = _load_corpus(man, args.corpus)
    topics = _load_topics(man, args.topics, corpus.num_words)
    too_big = [h for h in args.hstar if h > corpus.num_words]
    if too_big:
        raise UsageError(f"--hstar {too_big} exceeds the vocabulary size {corpus.num_words}")
    out = _out_dir(args.out)
    if args.solution:
        sol = read_solution(man.add_input(_resolve(args.solution, SOLUTION_FILE)), corpus, topics.labels)
        report = solution_report(sol, corpus, topics, ReportConfig(tuple(args.hstar), args.epsilon, args.sweep))
    else:
        report = {"num_topics": topics.num_topics, "coherence": {}}
        for h in args.hstar:
            c = topic_coherences(topics, corpus, CoherenceConfig(h, args.epsilon))
            report["coherence"][str(h)] = {"mean": float(c.mean()), "min": float(c.min()), "max": float(c.max())}
    path = man.add_output(out / "report.json")
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    if args.solution:
        text = render_table(report)
        man.add_output(out / "report.txt").write_text(text, encoding="utf-8")
        print(text, end="")
    man.write(out)
    return EXIT_OK


def cmd_compare(args) -> int:
    man = RunManifest("compare", args)
    corpus = _load_corpus(man, args.corpus)
    topics = _load_topics(man, args.topics, corpus.num_words, "uniform")
    a = read_assignment(man.add_input(_resolve(args.a, ASSIGNMENT_FILE)), corpus, topics.labels)
    b = read_assignment(man.add_input(_resolve(args.b, ASSIGNMENT_FILE)), corpus, topics.labels)
    res = compare_assignments(a, b, corpus, topics, args.alpha)
    out = _out_dir(args.out)
    rec = {"delta_likelihood": res.delta_likelihood, "delta_posterior": res.delta_posterior,
           "topics_per_doc_a": res.topics_per_doc_a, "topics_per_doc_b": res.topics_per_doc_b, "alpha": args.alpha}
    man.add_output(out / "comparison.json").write_text(json.dumps(rec, indent=2) + "\n", encoding="utf-8")
    man.write(out)
    print(json.dumps(rec))
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------

def _hstars(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 2:
        raise argparse.ArgumentTypeError("every h* must be an integer >= 2")
    return vals


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _add_placeholder(p):
    p.add_argument("--placeholder-log-p", type=float, default=DEFAULT_LOG_P,
                   help="log probability of the placeholder topic (default log 1e-10)")
    p.add_argument("--fixed-placeholder", action="store_true",
                   help="use the placeholder value as given instead of lowering it below every topic score")


def _add_theta(p):
    p.add_argument("--theta", choices=("auto", "uniform", "popularity"), default="auto",
                   help="topic prior: popularity weights when the topics carry them (auto), or uniform")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elda", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"elda {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tokenize a JSON-lines corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-doc-freq", type=int, default=1)
    p.add_argument("--max-doc-freq-fraction", type=float, default=1.0)
    p.add_argument("--stopwords")
    p.add_argument("--no-lowercase", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-topics", help="generate one candidate topic per keyword")
    p.add_argument("--corpus", required=True)
    p.add_argument("--generator", choices=("umass", "exp-umass", "cooccurrence"), default="exp-umass")
    p.add_argument("--epsilon", type=_positive)
    p.add_argument("--keywords", help="file of whitespace-separated keywords (default: whole vocabulary)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_topics)

    p = sub.add_parser("fit", help="link topics to documents")
    p.add_argument("--corpus", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--algorithm", choices=("simple", "fastgreedy", "ltlg", "fast"), default="fastgreedy")
    p.add_argument("--kappa", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=_positive, help="ltlg sampling / fast accuracy parameter")
    p.add_argument("--delta", type=_positive, default=0.05)
    p.add_argument("--sample-m", type=int)
    p.add_argument("--sweep", action="store_true", help="also write per-prefix reports for 1..kappa links per doc")
    p.add_argument("--hstar", type=_hstars, default=[5, 10])
    _add_placeholder(p)
    _add_theta(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", help="out-of-sample inference for held-out documents")
    p.add_argument("--corpus", required=True, help="training corpus directory (for its vocabulary)")
    p.add_argument("--topics", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--kappa-d", type=int, help="topics per document when a record has no kappa_d")
    p.add_argument("--no-lowercase", action="store_true")
    _add_placeholder(p)
    _add_theta(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="coherence and solution report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--solution", help="solution file or fit output directory (omit to score every topic)")
    p.add_argument("--hstar", type=_hstars, default=[5, 10, 15, 20, 25])
    p.add_argument("--epsilon", type=_positive, default=0.01)
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="posterior difference between two assignments")
    p.add_argument("--corpus", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--alpha", type=_positive, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"elda {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure; report without a traceback
        print(f"elda {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
