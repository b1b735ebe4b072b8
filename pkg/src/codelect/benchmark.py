"""Benchmark assembly: triplets from problem groupings, candidate-pair
tasks across pair types, and the exported dataset bundle.

A triplet pairs an origin with a second solution to the same problem
(positive) and a solution to a different problem (negative). Each pair
type turns a triplet into a two-candidate selection task; the accepted
candidate is the positive everywhere except obf_vs_neg, where the
obfuscated origin itself is the answer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import summarize
from .corpus import CodeUnit
from .errors import (AnalysisUnavailable, NothingToObfuscate, NothingToReplace,
                     NothingToShuffle, NoValidShuffle, Underfull, ValidationError)
from .jsonio import created_at, dumps, read_jsonl, sha256_text, write_jsonl, write_text
from .langspec import Language
from .perturb import PerturbationRecord, apply_kind
from .seeds import derive

PAIR_TYPES = ("pos_vs_neg", "obf_vs_neg", "pos_vs_lsh",
              "pos_vs_tsh", "pos_vs_kwr", "pos_vs_smr")

# pair type -> perturbation applied to the origin (None: plain triplet)
PAIR_KIND = {
    "pos_vs_neg": None,
    "obf_vs_neg": "obfuscate",
    "pos_vs_lsh": "line_shuffle",
    "pos_vs_tsh": "token_shuffle",
    "pos_vs_kwr": "keyword_replace",
    "pos_vs_smr": "symbol_replace",
}

_SKIP_ERRORS = (NoValidShuffle, NothingToShuffle, NothingToObfuscate,
                NothingToReplace, AnalysisUnavailable)


@dataclass(frozen=True)
class Triplet:
    triplet_id: str
    origin_id: str
    positive_id: str
    negative_id: str

    def to_json(self) -> dict:
        return {"triplet_id": self.triplet_id, "origin_id": self.origin_id,
                "positive_id": self.positive_id, "negative_id": self.negative_id}


@dataclass(frozen=True)
class CandidatePairTask:
    task_id: str
    pair_type: str
    query: str
    candidate_a: str
    candidate_b: str
    correct: str  # "A" | "B"
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.correct not in ("A", "B"):
            raise ValidationError(f"correct must be A or B, got {self.correct!r}")
        if self.pair_type not in PAIR_TYPES:
            raise ValidationError(f"unknown pair type {self.pair_type!r}")

    @property
    def accepted(self) -> str:
        return self.candidate_a if self.correct == "A" else self.candidate_b

    @property
    def rejected(self) -> str:
        return self.candidate_b if self.correct == "A" else self.candidate_a

    def to_json(self) -> dict:
        return {"task_id": self.task_id, "pair_type": self.pair_type,
                "query": self.query, "candidate_a": self.candidate_a,
                "candidate_b": self.candidate_b, "correct": self.correct,
                "provenance": self.provenance}

    @classmethod
    def from_json(cls, obj: dict) -> "CandidatePairTask":
        return cls(task_id=obj["task_id"], pair_type=obj["pair_type"],
                   query=obj["query"], candidate_a=obj["candidate_a"],
                   candidate_b=obj["candidate_b"], correct=obj["correct"],
                   provenance=obj.get("provenance", {}))


def _group_by_problem(units: list[CodeUnit]) -> dict[str, list[CodeUnit]]:
    groups: dict[str, list[CodeUnit]] = {}
    for unit in sorted(units, key=lambda u: u.id):
        groups.setdefault(unit.problem_id, []).append(unit)
    return groups


def feasible_triplet_count(units: list[CodeUnit]) -> int:
    groups = _group_by_problem(units)
    total_units = len(units)
    count = 0
    for problem, members in groups.items():
        negatives = total_units - len(members)
        pairs = 0
        for origin in members:
            pairs += sum(1 for pos in members
                         if pos.id != origin.id
                         and pos.solution_id != origin.solution_id)
        count += pairs * negatives
    return count


def build_triplets(units: list[CodeUnit], seed: int, n: int) -> list[Triplet]:
    """Uniform over feasible (origin, positive) pairs, then uniform over
    negatives; no triplet repeats. Small feasible spaces are enumerated
    outright, large ones rejection-sampled against a seen set."""
    if n < 0:
        raise ValidationError("triplet count must be >= 0")
    if n == 0:
        return []
    units = sorted(units, key=lambda u: u.id)
    groups = _group_by_problem(units)
    ordered_pairs: list[tuple[CodeUnit, CodeUnit]] = []
    for problem in sorted(groups):
        members = groups[problem]
        for origin in members:
            for pos in members:
                if pos.id != origin.id and pos.solution_id != origin.solution_id:
                    ordered_pairs.append((origin, pos))
    negatives_for = {
        problem: [u for u in units if u.problem_id != problem]
        for problem in groups
    }
    feasible = sum(len(negatives_for[o.problem_id]) for o, _ in ordered_pairs)
    if n > feasible:
        raise Underfull(requested=n, feasible=feasible)

    rng = random.Random(derive(seed, "triplets", ""))
    chosen: list[tuple[str, str, str]]
    if feasible <= max(10_000, 4 * n):
        universe = [(o.id, p.id, neg.id)
                    for o, p in ordered_pairs
                    for neg in negatives_for[o.problem_id]]
        chosen = rng.sample(universe, n)
    else:
        seen: set[tuple[str, str, str]] = set()
        chosen = []
        while len(chosen) < n:
            origin, pos = rng.choice(ordered_pairs)
            neg = rng.choice(negatives_for[origin.problem_id])
            key = (origin.id, pos.id, neg.id)
            if key not in seen:
                seen.add(key)
                chosen.append(key)
    chosen.sort()
    return [Triplet(f"t{i:06d}", o, p, ng) for i, (o, p, ng) in enumerate(chosen)]


def materialize_perturbations(triplets: list[Triplet], units_by_id: dict[str, CodeUnit],
                              pair_types, seed: int,
                              replace_count: int = 3, max_span: int = 5,
                              ) -> tuple[dict[tuple[str, str], object], dict[str, dict[str, int]]]:
    """One PerturbedUnit per (origin id, kind); tasks always obfuscate
    every binding (fraction=1, the hardest positive). Returns perturbed
    units keyed by (origin_id, kind) and per-type skip-reason counts."""
    kinds_needed = sorted({PAIR_KIND[pt] for pt in pair_types if PAIR_KIND[pt]})
    origins = sorted({t.origin_id for t in triplets})
    perturbed: dict[tuple[str, str], object] = {}
    failures: dict[tuple[str, str], str] = {}
    summaries: dict[str, object] = {}
    for origin_id in origins:
        unit = units_by_id[origin_id]
        try:
            if origin_id not in summaries:
                summaries[origin_id] = summarize(
                    unit.source, Language.parse(unit.language), unit.id)
            summary = summaries[origin_id]
        except AnalysisUnavailable as exc:
            for kind in kinds_needed:
                failures[(origin_id, kind)] = type(exc).__name__
            continue
        for kind in kinds_needed:
            kind_seed = derive(seed, f"perturb:{kind}", origin_id)
            try:
                perturbed[(origin_id, kind)] = apply_kind(
                    kind, unit, summary, kind_seed,
                    fraction=1.0, count=replace_count, max_span=max_span)
            except _SKIP_ERRORS as exc:
                failures[(origin_id, kind)] = type(exc).__name__

    skips: dict[str, dict[str, int]] = {}
    for pt in pair_types:
        kind = PAIR_KIND[pt]
        if kind is None:
            continue
        for t in triplets:
            reason = failures.get((t.origin_id, kind))
            if reason is not None:
                bucket = skips.setdefault(pt, {})
                bucket[reason] = bucket.get(reason, 0) + 1
    return perturbed, skips


def build_pair_tasks(triplets: list[Triplet], units_by_id: dict[str, CodeUnit],
                     pair_types, seed: int, *, replace_count: int = 3,
                     max_span: int = 5) -> tuple[list[CandidatePairTask], dict]:
    """One task per (triplet, pair type); a seeded fair coin decides
    whether the accepted candidate lands at A or B. Triplets whose
    origin admits no valid perturbation are skipped for that type only
    and counted."""
    for pt in pair_types:
        if pt not in PAIR_TYPES:
            raise ValidationError(f"unknown pair type {pt!r}")
    pair_types = sorted(pair_types, key=PAIR_TYPES.index)
    perturbed, skips = materialize_perturbations(
        triplets, units_by_id, pair_types, seed,
        replace_count=replace_count, max_span=max_span)

    tasks: list[CandidatePairTask] = []
    for triplet in triplets:
        origin = units_by_id[triplet.origin_id]
        positive = units_by_id[triplet.positive_id]
        negative = units_by_id[triplet.negative_id]
        for pt in pair_types:
            kind = PAIR_KIND[pt]
            perturbation_ref = None
            record = None
            if kind is None:
                accepted, rejected = positive.source, negative.source
            else:
                p = perturbed.get((triplet.origin_id, kind))
                if p is None:
                    continue
                record = p.record
                perturbation_ref = f"{triplet.origin_id}:{kind}"
                if pt == "obf_vs_neg":
                    accepted, rejected = p.source, negative.source
                else:
                    accepted, rejected = positive.source, p.source
            task_id = f"{triplet.triplet_id}-{pt}"
            coin = random.Random(derive(seed, "placement", task_id))
            correct = "A" if coin.random() < 0.5 else "B"
            if correct == "A":
                cand_a, cand_b = accepted, rejected
            else:
                cand_a, cand_b = rejected, accepted
            provenance = {"triplet_id": triplet.triplet_id,
                          "origin_id": triplet.origin_id,
                          "positive_id": triplet.positive_id,
                          "negative_id": triplet.negative_id,
                          "perturbation_ref": perturbation_ref}
            tasks.append(CandidatePairTask(
                task_id=task_id, pair_type=pt, query=origin.source,
                candidate_a=cand_a, candidate_b=cand_b, correct=correct,
                provenance=provenance))
    bundle_extras = {
        "skips": skips,
        "perturbed": perturbed,
        "triplets": triplets,
    }
    return tasks, bundle_extras


DATASET_FILE = "dataset.jsonl"
TRIPLETS_FILE = "triplets.jsonl"
PERTURBATIONS_FILE = "perturbations.jsonl"
MANIFEST_FILE = "manifest.json"


def export_dataset(tasks: list[CandidatePairTask], extras: dict, out_dir: Path,
                   seed: int, requested: int, pair_types) -> dict:
    if not tasks:
        raise ValidationError("refusing to export an empty dataset")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    task_rows = [t.to_json() for t in sorted(tasks, key=lambda t: t.task_id)]
    write_jsonl(out_dir / DATASET_FILE, task_rows)

    triplet_rows = [t.to_json() for t in extras["triplets"]]
    write_jsonl(out_dir / TRIPLETS_FILE, triplet_rows)

    perturb_rows = []
    for (origin_id, kind) in sorted(extras["perturbed"]):
        p = extras["perturbed"][(origin_id, kind)]
        perturb_rows.append({"ref": f"{origin_id}:{kind}",
                             "base_unit_id": p.base_unit_id,
                             "source": p.source,
                             "logically_equivalent": p.logically_equivalent,
                             "record": p.record.to_json()})
    write_jsonl(out_dir / PERTURBATIONS_FILE, perturb_rows)

    counts: dict[str, int] = {}
    for t in tasks:
        counts[t.pair_type] = counts.get(t.pair_type, 0) + 1
    manifest = {
        "seed": seed,
        "requested_triplets": requested,
        "triplet_count": len(extras["triplets"]),
        "pair_types": sorted(pair_types, key=PAIR_TYPES.index),
        "task_count": len(tasks),
        "counts": {pt: counts.get(pt, 0) for pt in sorted(counts)},
        "skipped": {pt: dict(sorted(extras["skips"][pt].items()))
                    for pt in sorted(extras["skips"])},
        "created_at": created_at(),
        "dataset_sha256": sha256_text(
            "".join(dumps(r) + "\n" for r in task_rows)),
    }
    write_text(out_dir / MANIFEST_FILE, dumps(manifest) + "\n")
    return manifest


def load_dataset(bundle_dir: Path) -> tuple[list[CandidatePairTask], dict]:
    bundle_dir = Path(bundle_dir)
    tasks = [CandidatePairTask.from_json(row)
             for row in read_jsonl(bundle_dir / DATASET_FILE)]
    manifest_path = bundle_dir / MANIFEST_FILE
    manifest = {}
    if manifest_path.exists():
        import json

        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    return tasks, manifest


def load_perturbation_sources(bundle_dir: Path) -> dict[str, dict]:
    path = Path(bundle_dir) / PERTURBATIONS_FILE
    if not path.exists():
        return {}
    return {row["ref"]: row for row in read_jsonl(path)}


def simtable_entries(tasks: list[CandidatePairTask],
                     perturbations: dict[str, dict]) -> list[dict]:
    """Rows for the similarity table: each task contributes its query
    as the origin plus whichever variants its triplet materialized."""
    by_triplet: dict[str, dict] = {}
    for task in tasks:
        trip = task.provenance.get("triplet_id", task.task_id)
        slot = by_triplet.setdefault(trip, {"origin": task.query})
        if task.pair_type == "pos_vs_neg":
            slot["pos"] = task.accepted
            slot["neg"] = task.rejected
        elif task.pair_type == "obf_vs_neg":
            slot["obf"] = task.accepted
            slot["neg"] = task.rejected
        else:
            slot["pos"] = task.accepted
        origin_id = task.provenance.get("origin_id")
        if origin_id is not None:
            for kind, key in (("obfuscate", "obf"), ("line_shuffle", "lsh")):
                row = perturbations.get(f"{origin_id}:{kind}")
                if row is not None:
                    slot[key] = row["source"]
    entries = []
    for task in tasks:
        trip = task.provenance.get("triplet_id", task.task_id)
        slot = by_triplet[trip]
        entries.append({"task_id": task.task_id, "pair_type": task.pair_type,
                        "origin": slot.get("origin"), "obf": slot.get("obf"),
                        "lsh": slot.get("lsh"), "pos": slot.get("pos"),
                        "neg": slot.get("neg")})
    return entries
