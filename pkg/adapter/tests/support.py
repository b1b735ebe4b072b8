"""Builders shared by the adapter tests.

The checkpoint is a randomly initialized 2-layer transformer with a
whitespace word-level tokenizer, written to disk so loading goes
through the same path as any published model. Seeded weights keep
every loading session identical. Benchmark bundles are produced by
driving the installed codelect binary the same way an outside
embedder integration would, so these tests never import that package.
"""

from __future__ import annotations

import json
import shutil
import subprocess
from pathlib import Path

import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2Model, PreTrainedTokenizerFast

HIDDEN = 32
CONTEXT = 64

# Digits keep problem-distinguishing constants in-vocabulary; anything
# else unseen collapses to [UNK], which is fine for random weights.
WORDS = (
    ["[PAD]", "[UNK]", "public", "int", "solve", "(", ")", "{", "}", ";",
     "=", "+", "-", "*", "%", "return", "for", "if", "n", "i",
     "total", "extra", "step", "bump", "<=", "<", "++"]
    + [str(k) for k in range(41)]
)

JAVA_METHOD = """\
public int solve(int n) {{
    int total = {seed};
    for (int i = 1; i <= n; i++) {{
        total = total + i * {a};
    }}
    return total - {b};
}}
"""


def save_tiny_checkpoint(out: Path) -> Path:
    vocab = {w: k for k, w in enumerate(WORDS)}
    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    fast = PreTrainedTokenizerFast(tokenizer_object=tok, unk_token="[UNK]",
                                   pad_token="[PAD]")
    cfg = GPT2Config(vocab_size=len(vocab), n_positions=CONTEXT,
                     n_embd=HIDDEN, n_layer=2, n_head=2,
                     bos_token_id=None, eos_token_id=None)
    torch.manual_seed(0)
    GPT2Model(cfg).save_pretrained(out)
    fast.save_pretrained(out)
    return out


def run_codelect(*argv) -> dict:
    binary = shutil.which("codelect")
    assert binary, "codelect console script not installed"
    proc = subprocess.run([binary, *map(str, argv)], capture_output=True,
                          text=True, timeout=300)
    assert proc.returncode == 0, f"{argv}: {proc.stdout}{proc.stderr}"
    return json.loads(proc.stdout.strip().splitlines()[-1])


def build_bundle(base: Path) -> Path:
    """Six problems, two solutions each; twenty same-problem selection tasks."""
    raw = base / "raw"
    for p in range(6):
        for s in range(2):
            path = raw / f"p{p:02d}" / f"s{s}.java"
            path.parent.mkdir(parents=True, exist_ok=True)
            body = JAVA_METHOD.format(seed=3 + 5 * p + s, a=2 + p, b=1 + s)
            path.write_text(body, encoding="utf-8")
    run_codelect("ingest", "--in", raw, "--language", "java",
                 "--out", base / "corpus")
    summary = run_codelect("bench", "build", "--in", base / "corpus",
                           "--n", 20, "--seed", 0,
                           "--types", "pos_vs_neg", "--out", base / "bench")
    assert summary["task_count"] == 20
    return base / "bench"
