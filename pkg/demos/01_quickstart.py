"""
Linking topics to documents
===========================

A three-document corpus, one candidate topic per vocabulary word, and a
greedy search for the links that best explain every word.
"""

import numpy as np

from elda import GeneratorConfig, SolverConfig, assignment_from_links, build_candidate_set, fast_greedy, ingest

# Each raw document is an (id, text) pair; ingest tokenizes and builds the vocabulary.
corpus = ingest([("d1", "a a b"), ("d2", "b c"), ("d3", "a")])
print("vocabulary:", corpus.vocab)
print("documents:", corpus.num_docs)

# One candidate topic per keyword, built from document co-occurrence counts.
topics = build_candidate_set(corpus, GeneratorConfig("cooccurrence"))
print("candidate topics:", topics.labels)
print(np.round(np.exp(topics.log_probs), 3))

# kappa is the average number of topics per document; the budget is kappa * |D| links.
solution = fast_greedy(corpus, topics, SolverConfig(kappa=2))
for step, ((t, d), gain) in enumerate(zip(solution.links, solution.marginals), 1):
    print(f"step {step}: link {corpus.doc_ids[d]} -> topic {topics.labels[t]!r}  gain {gain:.3f}")
print("objective:", solution.objective)

# Every word takes its most probable linked topic.
assignment = assignment_from_links(solution.links, corpus, topics)
for d, doc in enumerate(corpus.docs):
    words = [corpus.vocab[w] for w in doc.tokens()]
    labels = [topics.labels[z] for z in assignment.tokens[d]]
    print(corpus.doc_ids[d], list(zip(words, labels)))
