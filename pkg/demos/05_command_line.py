"""
The command-line pipeline
=========================

ingest, gen-topics, fit, eval and infer, run in a temporary directory.
Each step writes a manifest.json next to its outputs.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

docs = ["river bank water fish", "bank loan money interest", "fish water boat river",
        "money interest rate loan", "boat water river"]

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    (root / "docs.jsonl").write_text("".join(json.dumps({"id": f"d{i}", "text": t}) + "\n"
                                             for i, t in enumerate(docs)))
    (root / "held.jsonl").write_text(json.dumps({"id": "h", "text": "fish in the river", "kappa_d": 1}) + "\n")

    def elda(*args):
        cmd = [sys.executable, "-m", "elda", *map(str, args)]
        print("$ elda", " ".join(map(str, args)), flush=True)
        subprocess.run(cmd, check=True)

    elda("ingest", "--input", root / "docs.jsonl", "--out", root / "corpus")
    elda("gen-topics", "--corpus", root / "corpus", "--generator", "exp-umass", "--out", root / "topics")
    elda("fit", "--corpus", root / "corpus", "--topics", root / "topics", "--kappa", 2, "--hstar", "2,3",
         "--out", root / "fit")
    elda("eval", "--corpus", root / "corpus", "--topics", root / "topics", "--solution", root / "fit",
         "--hstar", "2,3", "--out", root / "eval")
    elda("infer", "--corpus", root / "corpus", "--topics", root / "topics", "--input", root / "held.jsonl",
         "--out", root / "infer")

    print((root / "fit" / "solution.jsonl").read_text().splitlines()[0])
    report = json.loads((root / "eval" / "report.json").read_text())
    print("objective", report["objective"], "coherence", report["coherence"])
    print((root / "infer" / "assignment.jsonl").read_text().strip())
