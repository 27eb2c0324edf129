"""
Topics for documents that were not in the training corpus
=========================================================

Once a topic set is fixed, each new document is solved on its own: pick
kappa_d topics for it greedily and assign its words.  Documents do not
influence each other, so a batch can be split across threads.
"""

from elda import GeneratorConfig, OosRequest, build_candidate_set, infer_batch, ingest
from elda.oos import requests_from_records

train = ingest([
    ("t1", "river bank water fish"),
    ("t2", "bank loan money interest"),
    ("t3", "fish water boat river"),
    ("t4", "money interest rate loan"),
    ("t5", "boat water river"),
])
topics = build_candidate_set(train, GeneratorConfig("exp_umass"))

# Words outside the training vocabulary are dropped and counted.
records = [
    {"id": "h1", "text": "the river bank had fish", "kappa_d": 2},
    {"id": "h2", "text": "loan interest money", "kappa_d": 1},
]
requests = requests_from_records(records, train.vocab)
for req, res in zip(requests, infer_batch(requests, topics, threads=2)):
    chosen = [topics.labels[t] for t in res.topics]
    print(f"{req.doc_id}: topics {chosen}, dropped {req.oov_dropped} unknown words, objective {res.trace[-1]:.3f}")

# A single request works the same way.
res = infer_batch([OosRequest(train.docs[0], 1, "t1")], topics)[0]
print("t1 with one topic:", topics.labels[res.topics[0]])
