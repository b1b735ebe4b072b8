"""Scoring embedders and prompted models on candidate-pair datasets.

Cosine distances between query and candidate embeddings decide each
task; a task is correct only when the accepted candidate is STRICTLY
closer. Exact ties count against the embedder: permutation-invariant
embedders produce them structurally (a line-shuffled candidate has the
same token counts as the query), so the policy has to be explicit.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ShapeError, ZeroVector
from .jsonio import sha256_text

OUTCOME_CORRECT = "correct"
OUTCOME_INCORRECT = "incorrect"
OUTCOME_TIE = "tie"
OUTCOME_SKIPPED = "skipped"

SIMTABLE_COLUMNS = ("task_id", "pair_type", "d_obf", "d_lsh", "d_pos", "d_neg")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ShapeError(f"cosine over shapes {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine of zero vector")
    if np.array_equal(u, v):
        return 1.0
    value = float(np.dot(u, v) / (nu * nv))
    # rounding can push |value| a hair past 1; anything further is a bug
    if abs(value) > 1.0 + 1e-12:
        raise ShapeError(f"cosine out of range: {value!r}")
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class Verdict:
    task_id: str
    pair_type: str
    d_accepted: float | None
    d_rejected: float | None
    outcome: str

    def to_json(self) -> dict:
        return {"task_id": self.task_id, "pair_type": self.pair_type,
                "d_accepted": self.d_accepted, "d_rejected": self.d_rejected,
                "outcome": self.outcome}


def score_pair_task(task, e_query, e_a, e_b) -> Verdict:
    """task needs task_id, pair_type, correct ("A"/"B")."""
    try:
        d_a = cosine(e_query, e_a)
        d_b = cosine(e_query, e_b)
    except ZeroVector:
        return Verdict(task.task_id, task.pair_type, None, None, OUTCOME_SKIPPED)
    if task.correct == "A":
        d_acc, d_rej = d_a, d_b
    else:
        d_acc, d_rej = d_b, d_a
    if d_acc > d_rej:
        outcome = OUTCOME_CORRECT
    elif d_acc == d_rej:
        outcome = OUTCOME_TIE
    else:
        outcome = OUTCOME_INCORRECT
    return Verdict(task.task_id, task.pair_type, d_acc, d_rej, outcome)


@dataclass
class EvalReport:
    embedder_id: str
    dataset_hash: str
    per_type: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        overall = {k: 0 for k in (OUTCOME_CORRECT, OUTCOME_INCORRECT,
                                  OUTCOME_TIE, OUTCOME_SKIPPED)}
        for counts in self.per_type.values():
            for k in overall:
                overall[k] += counts[k]
        out = {"embedder_id": self.embedder_id, "dataset_hash": self.dataset_hash,
               "per_type": {}, "overall": dict(overall)}
        for pt in sorted(self.per_type):
            counts = self.per_type[pt]
            out["per_type"][pt] = dict(counts)
            out["per_type"][pt]["accuracy"] = _accuracy(counts)
        out["overall"]["accuracy"] = _accuracy(overall)
        return out

    def accuracy(self, pair_type: str) -> float:
        return _accuracy(self.per_type[pair_type])


def _accuracy(counts: dict) -> float:
    denom = counts[OUTCOME_CORRECT] + counts[OUTCOME_INCORRECT] + counts[OUTCOME_TIE]
    return counts[OUTCOME_CORRECT] / denom if denom else 0.0


def aggregate(verdicts, embedder_id: str = "", dataset_hash: str = "") -> EvalReport:
    report = EvalReport(embedder_id=embedder_id, dataset_hash=dataset_hash)
    for verdict in sorted(verdicts, key=lambda v: (v.pair_type, v.task_id)):
        counts = report.per_type.setdefault(
            verdict.pair_type,
            {k: 0 for k in (OUTCOME_CORRECT, OUTCOME_INCORRECT,
                            OUTCOME_TIE, OUTCOME_SKIPPED)})
        counts[verdict.outcome] += 1
    return report


def score_dataset(tasks, vectors_by_digest: dict, embedder_id: str = "",
                  dataset_hash: str = "") -> EvalReport:
    """Vectors are keyed by sha256 of the exact text, so one embedding
    run serves any number of pair types that reuse a source."""
    verdicts = []
    for task in tasks:
        e_q = vectors_by_digest.get(sha256_text(task.query))
        e_a = vectors_by_digest.get(sha256_text(task.candidate_a))
        e_b = vectors_by_digest.get(sha256_text(task.candidate_b))
        if e_q is None or e_a is None or e_b is None:
            verdicts.append(Verdict(task.task_id, task.pair_type,
                                    None, None, OUTCOME_SKIPPED))
        else:
            verdicts.append(score_pair_task(task, e_q, e_a, e_b))
    return aggregate(verdicts, embedder_id=embedder_id, dataset_hash=dataset_hash)


def similarity_table(entries, vectors_by_digest: dict, sample_n: int,
                     seed: int) -> tuple[list[dict], list[str]]:
    """Per-origin distances to the obfuscated / line-shuffled / positive
    / negative variants.

    entries: dicts with task_id, pair_type and texts under keys
    origin, obf, lsh, pos, neg (missing variants yield blank cells).
    Returns (rows, warnings); the last row holds per-column means.
    """
    warnings: list[str] = []
    pool = sorted(entries, key=lambda e: e["task_id"])
    if sample_n > len(pool):
        warnings.append(f"sample_n {sample_n} exceeds {len(pool)} rows; clamped")
        sample_n = len(pool)
    if sample_n == 0:
        warnings.append("EmptySample: no rows to tabulate")
        return [], warnings
    rng = random.Random(seed)
    chosen = sorted(rng.sample(pool, sample_n), key=lambda e: e["task_id"])

    rows = []
    sums = {col: [] for col in ("d_obf", "d_lsh", "d_pos", "d_neg")}
    for entry in chosen:
        origin_vec = vectors_by_digest.get(sha256_text(entry["origin"]))
        row = {"task_id": entry["task_id"], "pair_type": entry["pair_type"]}
        for col, key in (("d_obf", "obf"), ("d_lsh", "lsh"),
                         ("d_pos", "pos"), ("d_neg", "neg")):
            text = entry.get(key)
            vec = None if text is None else vectors_by_digest.get(sha256_text(text))
            if origin_vec is None or vec is None:
                row[col] = None
                continue
            try:
                row[col] = cosine(origin_vec, vec)
            except ZeroVector:
                row[col] = None
            else:
                sums[col].append(row[col])
        rows.append(row)
    means = {"task_id": "mean", "pair_type": ""}
    for col, values in sums.items():
        means[col] = math.fsum(values) / len(values) if values else None
    rows.append(means)
    return rows, warnings


def simtable_csv(rows) -> str:
    lines = [",".join(SIMTABLE_COLUMNS)]
    for row in rows:
        cells = []
        for col in SIMTABLE_COLUMNS:
            value = row.get(col)
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


PROMPT_TEMPLATE_FILE = "prompt_java.txt"
_PLACEHOLDERS = ("{Query Code}", "{Candidate A Code}", "{Candidate B Code}")


def _load_template() -> str:
    ref = resources.files("codelect").joinpath("data", PROMPT_TEMPLATE_FILE)
    return ref.read_bytes().decode("utf-8")


def render_prompt(task) -> str:
    template = _load_template()
    for placeholder in _PLACEHOLDERS:
        if placeholder not in template:
            raise ShapeError(f"prompt template lost placeholder {placeholder}")
    return (template
            .replace("{Query Code}", task.query)
            .replace("{Candidate A Code}", task.candidate_a)
            .replace("{Candidate B Code}", task.candidate_b))


_ANSWER_RE = re.compile(r"\A([AB])[.,:;!?]?\Z")

ANSWER_A = "A"
ANSWER_B = "B"
ANSWER_MALFORMED = "malformed"


def parse_answer(completion: str) -> str:
    """Accepts exactly "A" or "B" (surrounding whitespace and one
    trailing punctuation mark tolerated); everything else, prose
    included, is malformed."""
    m = _ANSWER_RE.match(completion.strip())
    return m.group(1) if m else ANSWER_MALFORMED


def grade_completions(tasks, completions: dict) -> dict:
    """completions: task_id -> completion text. Accuracy counts only
    well-formed answers, mirroring how malformed generations are
    excluded from QA scoring."""
    graded = correct = malformed = missing = 0
    per_type: dict[str, dict] = {}
    for task in sorted(tasks, key=lambda t: t.task_id):
        bucket = per_type.setdefault(task.pair_type,
                                     {"graded": 0, "correct": 0,
                                      "malformed": 0, "missing": 0})
        text = completions.get(task.task_id)
        if text is None:
            missing += 1
            bucket["missing"] += 1
            continue
        answer = parse_answer(text)
        if answer == ANSWER_MALFORMED:
            malformed += 1
            bucket["malformed"] += 1
            continue
        graded += 1
        bucket["graded"] += 1
        if answer == task.correct:
            correct += 1
            bucket["correct"] += 1
    out = {"graded": graded, "correct": correct, "malformed": malformed,
           "missing": missing,
           "accuracy": correct / graded if graded else 0.0,
           "per_type": {}}
    for pt in sorted(per_type):
        bucket = per_type[pt]
        bucket["accuracy"] = (bucket["correct"] / bucket["graded"]
                              if bucket["graded"] else 0.0)
        out["per_type"][pt] = bucket
    return out
