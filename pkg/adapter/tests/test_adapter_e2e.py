"""Twenty benchmark tasks scored end to end through the harness CLI.

The adapter only ever meets the harness as a child process speaking
the wire protocol, exactly as a user would wire it up.
"""

from __future__ import annotations

import json
import shutil

from support import HIDDEN, run_codelect


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def test_embed_then_score(checkpoint, bundle, tmp_path):
    adapter = shutil.which("codelect-adapter")
    assert adapter, "codelect-adapter console script not installed"

    vectors_path = tmp_path / "vectors.jsonl"
    embed = run_codelect(
        "eval", "embed", "--dataset", bundle,
        "--embedder", f"{adapter} --model {checkpoint} --batch-size 8",
        "--out", vectors_path)
    assert embed["embedder_id"] == "hf-tiny-mean"
    assert embed["dims"] == HIDDEN
    assert embed["errors"] == 0
    assert embed["vectors"] == embed["texts"] > 0

    rows = read_jsonl(vectors_path)
    header = rows[0]
    assert header["type"] == "header" and header["embedder_id"] == "hf-tiny-mean"
    body = [r for r in rows if r.get("type") == "vector"]
    assert len(body) == embed["vectors"]
    assert all(len(r["values"]) == HIDDEN for r in body)

    report_path = tmp_path / "report.json"
    report = run_codelect("eval", "score", "--dataset", bundle,
                          "--vectors", vectors_path, "--report", report_path)
    assert report["embedder_id"] == "hf-tiny-mean"
    assert set(report["per_type"]) == {"pos_vs_neg"}
    cell = report["per_type"]["pos_vs_neg"]
    assert cell["correct"] + cell["incorrect"] + cell["tie"] == 20
    assert cell["skipped"] == 0
    assert 0.0 <= cell["accuracy"] <= 1.0

    on_disk = json.loads(report_path.read_text(encoding="utf-8"))
    assert on_disk == report
