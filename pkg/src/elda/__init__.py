"""Near-optimal LDA MAP topic-word assignments by submodular maximisation.

Documents are linked to topics drawn from a large candidate set; each word
takes its most probable linked topic.  The log posterior of that assignment
is monotone submodular in the set of links, so greedy selection under a
budget of ``kappa * |D|`` links is within ``1 - 1/e`` of optimal.
"""

from .corpus import (Corpus, DocRow, TokenizerConfig, co_doc_counts, doc_frequencies, ingest,
                     read_corpus, read_vocab, write_corpus, write_vocab)
from .errors import (BudgetError, CertificationError, DimensionMismatchError, DuplicateLinkError, EldaError,
                     EmptyCorpusError, FormatError, MalformedInputError, MissingLinkError, NormalizationError)
from .evaluate import (CoherenceConfig, ReportConfig, compare_assignments, solution_report, top_words,
                       umass_coherence)
from .fast import FastConfig, PrefixQueryContext, fast_full, fast_inner, geometric_grid, simulated_marginal
from .greedy import MemoState, SolverConfig, fast_greedy, fast_initialize, simple_greedy, update
from .ltlg import LtlgConfig, ltlg
from .objective import (Assignment, Link, LinkSolution, PlaceholderConfig, assign_words, assignment_from_links,
                        expected_topics_per_doc, log_posterior_full, marginal_value_naive, objective_f,
                        objective_fdot)
from .oos import OosRequest, infer_batch, infer_out_of_sample
from .topics import GeneratorConfig, TopicMatrix, build_candidate_set, export_topics, gen_topic, import_topics

__version__ = "0.1.0"
