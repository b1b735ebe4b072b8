import json
from collections import Counter

import pytest

from codelect.benchmark import (
    PAIR_KIND, PAIR_TYPES, CandidatePairTask, build_pair_tasks, build_triplets,
    export_dataset, feasible_triplet_count, load_dataset,
    load_perturbation_sources, simtable_entries,
)
from codelect.errors import Underfull, ValidationError
from codelect.jsonio import sha256_text
from codelect.langspec import Language
from codelect.perturb import PerturbationRecord
from corpusgen import make_unit

DEPENDENT_JAVA = """\
int calc(int n) {
    int a = n + 1;
    int b = a * 2;
    a = b - n;
    return a + b;
}"""

INDEPENDENT_JAVA = """\
void setup(int n) {
    int a = 1;
    int b = 2;
    int c = 3;
}"""

NEGATIVE_JAVA = """\
int peak(int x) {
    int best = x * x;
    int cap = best + 7;
    return cap - best;
}"""


def square_units():
    """2 problems x 2 solutions, all sources distinct."""
    units = []
    for p in range(2):
        for s in range(2):
            src = (f"int f{p}{s}(int z) {{\n"
                   f"    int w = z + {10 * p + s};\n"
                   f"    int v = w * {p + 2};\n"
                   f"    return v - w;\n}}")
            units.append(make_unit(src, Language.JAVA, uid=f"u{p}{s}",
                                   problem=f"q{p}", solution=f"s{s}"))
    return units


def skip_scenario_units():
    return [
        make_unit(DEPENDENT_JAVA, Language.JAVA, uid="dep",
                  problem="pa", solution="s0"),
        make_unit(INDEPENDENT_JAVA, Language.JAVA, uid="ind",
                  problem="pa", solution="s1"),
        make_unit(NEGATIVE_JAVA, Language.JAVA, uid="neg",
                  problem="pb", solution="s0"),
    ]


# --------------------------------------------------------------- triplets


def test_feasible_count_square():
    assert feasible_triplet_count(square_units()) == 8


def test_feasible_count_skips_same_solution_id():
    units = [
        make_unit("int a() {\n    return 1;\n}", Language.JAVA, uid="a",
                  problem="p", solution="dup"),
        make_unit("int b() {\n    return 2;\n}", Language.JAVA, uid="b",
                  problem="p", solution="dup"),
        make_unit("int c() {\n    return 3;\n}", Language.JAVA, uid="c",
                  problem="p", solution="other"),
        make_unit("int d() {\n    return 4;\n}", Language.JAVA, uid="d",
                  problem="q", solution="s"),
    ]
    # a-b excluded both ways (same solution id); 4 ordered pairs remain
    assert feasible_triplet_count(units) == 4


def test_build_triplets_enumerates_small_space_completely():
    units = square_units()
    triplets = build_triplets(units, seed=5, n=8)
    got = {(t.origin_id, t.positive_id, t.negative_id) for t in triplets}
    by_id = {u.id: u for u in units}
    want = set()
    for origin in units:
        for pos in units:
            if pos.id == origin.id or pos.problem_id != origin.problem_id:
                continue
            if pos.solution_id == origin.solution_id:
                continue
            for neg in units:
                if neg.problem_id != origin.problem_id:
                    want.add((origin.id, pos.id, neg.id))
    assert got == want
    assert len(got) == 8
    for t in triplets:
        assert by_id[t.origin_id].problem_id == by_id[t.positive_id].problem_id
        assert by_id[t.origin_id].problem_id != by_id[t.negative_id].problem_id
    # ids are sequential over the sorted keys
    assert [t.triplet_id for t in triplets] == [f"t{i:06d}" for i in range(8)]


def test_build_triplets_underfull():
    with pytest.raises(Underfull) as err:
        build_triplets(square_units(), seed=0, n=9)
    assert err.value.requested == 9
    assert err.value.feasible == 8
    with pytest.raises(ValidationError):
        build_triplets(square_units(), seed=0, n=-1)
    assert build_triplets(square_units(), seed=0, n=0) == []


def invariants(triplets, units):
    by_id = {u.id: u for u in units}
    keys = [(t.origin_id, t.positive_id, t.negative_id) for t in triplets]
    assert len(set(keys)) == len(keys)
    assert keys == sorted(keys)
    for t in triplets:
        o, p, n = by_id[t.origin_id], by_id[t.positive_id], by_id[t.negative_id]
        assert o.id != p.id
        assert o.problem_id == p.problem_id
        assert o.solution_id != p.solution_id
        assert n.problem_id != o.problem_id


def test_build_triplets_enumeration_path(small_java):
    _, units = small_java
    assert feasible_triplet_count(units) == 540
    triplets = build_triplets(units, seed=2, n=30)
    assert len(triplets) == 30
    invariants(triplets, units)
    assert build_triplets(units, seed=2, n=30) == triplets
    assert build_triplets(units, seed=3, n=30) != triplets


def test_build_triplets_rejection_path(toy_java):
    _, units = toy_java
    assert feasible_triplet_count(units) == 44100  # forces sampling, not enumeration
    triplets = build_triplets(units, seed=2, n=60)
    assert len(triplets) == 60
    invariants(triplets, units)
    assert build_triplets(units, seed=2, n=60) == triplets


# -------------------------------------------------------------- pair tasks


def test_task_validation():
    with pytest.raises(ValidationError):
        CandidatePairTask("t", "pos_vs_neg", "q", "a", "b", "C")
    with pytest.raises(ValidationError):
        CandidatePairTask("t", "pos_vs_zzz", "q", "a", "b", "A")
    task = CandidatePairTask("t", "pos_vs_neg", "q", "a", "b", "B")
    assert task.accepted == "b" and task.rejected == "a"


def test_pair_tasks_candidates_and_placement(small_java):
    _, units = small_java
    by_id = {u.id: u for u in units}
    triplets = build_triplets(units, seed=1, n=20)
    tasks, extras = build_pair_tasks(triplets, by_id, PAIR_TYPES, seed=1)
    assert extras["skips"] == {}
    assert len(tasks) == 20 * len(PAIR_TYPES)
    trip_by_id = {t.triplet_id: t for t in triplets}
    for task in tasks:
        trip = trip_by_id[task.provenance["triplet_id"]]
        origin, pos, neg = (by_id[trip.origin_id], by_id[trip.positive_id],
                            by_id[trip.negative_id])
        assert task.query == origin.source
        assert task.task_id == f"{trip.triplet_id}-{task.pair_type}"
        if task.pair_type == "pos_vs_neg":
            assert {task.candidate_a, task.candidate_b} == {pos.source, neg.source}
            assert task.accepted == pos.source
        elif task.pair_type == "obf_vs_neg":
            assert task.rejected == neg.source
            assert task.accepted != origin.source  # renamed origin
        else:
            assert task.accepted == pos.source
            assert task.rejected != origin.source
    letters = Counter(t.correct for t in tasks)
    assert letters["A"] > 0 and letters["B"] > 0
    # placement and contents are reproducible
    again, _ = build_pair_tasks(triplets, by_id, PAIR_TYPES, seed=1)
    assert [t.correct for t in again] == [t.correct for t in tasks]
    assert [t.to_json() for t in again] == [t.to_json() for t in tasks]


def test_pair_tasks_skip_counting():
    units = skip_scenario_units()
    by_id = {u.id: u for u in units}
    triplets = build_triplets(units, seed=0, n=2)
    tasks, extras = build_pair_tasks(triplets, by_id, PAIR_TYPES, seed=0)
    assert extras["skips"] == {"pos_vs_lsh": {"NoValidShuffle": 1}}
    produced = Counter(t.pair_type for t in tasks)
    assert produced["pos_vs_lsh"] == 1
    for pt in PAIR_TYPES:
        if pt != "pos_vs_lsh":
            assert produced[pt] == 2
    lsh_tasks = [t for t in tasks if t.pair_type == "pos_vs_lsh"]
    assert lsh_tasks[0].provenance["origin_id"] == "dep"


def test_pair_tasks_unknown_type():
    units = skip_scenario_units()
    by_id = {u.id: u for u in units}
    triplets = build_triplets(units, seed=0, n=1)
    with pytest.raises(ValidationError):
        build_pair_tasks(triplets, by_id, ["pos_vs_qqq"], seed=0)


# ---------------------------------------------------------- export / load


@pytest.fixture()
def exported(tmp_path, small_java):
    _, units = small_java
    by_id = {u.id: u for u in units}
    triplets = build_triplets(units, seed=4, n=12)
    tasks, extras = build_pair_tasks(triplets, by_id, PAIR_TYPES, seed=4)
    out = tmp_path / "bundle"
    manifest = export_dataset(tasks, extras, out, seed=4, requested=12,
                              pair_types=PAIR_TYPES)
    return out, tasks, extras, manifest


def test_export_manifest_recount(exported):
    out, tasks, extras, manifest = exported
    assert manifest["seed"] == 4
    assert manifest["requested_triplets"] == 12
    assert manifest["triplet_count"] == 12
    assert manifest["task_count"] == len(tasks)
    assert manifest["counts"] == dict(Counter(t.pair_type for t in tasks))
    assert manifest["pair_types"] == list(PAIR_TYPES)
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk == manifest
    # the advertised digest is the digest of the file as written
    assert manifest["dataset_sha256"] == sha256_text(
        (out / "dataset.jsonl").read_text())


def test_export_load_round_trip(exported):
    out, tasks, _, manifest = exported
    loaded, loaded_manifest = load_dataset(out)
    assert loaded_manifest == manifest
    by_id = {t.task_id: t for t in tasks}
    assert len(loaded) == len(tasks)
    for task in loaded:
        original = by_id[task.task_id]
        assert task == original
        assert task.to_json() == original.to_json()


def test_export_refuses_empty(tmp_path):
    with pytest.raises(ValidationError):
        export_dataset([], {"triplets": [], "perturbed": {}, "skips": {}},
                       tmp_path / "x", seed=0, requested=0, pair_types=PAIR_TYPES)


def test_perturbation_refs_dereference(exported):
    out, tasks, _, _ = exported
    rows = load_perturbation_sources(out)
    for task in tasks:
        ref = task.provenance["perturbation_ref"]
        if task.pair_type == "pos_vs_neg":
            assert ref is None
            continue
        row = rows[ref]
        assert row["base_unit_id"] == task.provenance["origin_id"]
        rec = PerturbationRecord.from_json(row["record"])
        assert rec.kind == PAIR_KIND[task.pair_type]
        if task.pair_type == "obf_vs_neg":
            assert row["source"] == task.accepted
            assert row["logically_equivalent"]
        else:
            assert row["source"] == task.rejected
            assert not row["logically_equivalent"]


def test_simtable_entries_align(exported):
    out, tasks, _, _ = exported
    entries = simtable_entries(tasks, load_perturbation_sources(out))
    assert len(entries) == len(tasks)
    by_task = {t.task_id: t for t in tasks}
    for entry in entries:
        task = by_task[entry["task_id"]]
        assert entry["origin"] == task.query
        assert entry["pair_type"] == task.pair_type
        if task.pair_type == "obf_vs_neg":
            assert entry["obf"] == task.accepted
        if task.pair_type == "pos_vs_neg":
            assert entry["pos"] == task.accepted
            assert entry["neg"] == task.rejected
        if task.pair_type == "pos_vs_lsh":
            assert entry["lsh"] == task.rejected
