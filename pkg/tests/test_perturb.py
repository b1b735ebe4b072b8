from dataclasses import replace

import pytest

from codelect.analysis import scope_line_blocks, summarize, summarize_unit
from codelect.errors import (
    NothingToObfuscate, NothingToReplace, NothingToShuffle, NoValidShuffle,
    WrongKind,
)
from codelect.langspec import Language, reserved_keywords
from codelect.perturb import (
    KINDS, PerturbationRecord, apply_kind, deobfuscate, keyword_replace,
    line_shuffle, obfuscate, shuffled_block_multiset, symbol_replace,
    token_shuffle,
)
from corpusgen import make_unit

DEMO_OBF = """\
public void F0(int V0) {
    while (V0 < 20) {
        System.out.print(V0);
        V0++;
    }
}"""

DEMO_SWAPPED = """\
public void main(int num) {
    while (num < 20) {
        num++;
        System.out.print(num);
    }
}"""


# ------------------------------------------------------------- obfuscate


def test_obfuscate_demo(demo_unit, demo_summary):
    p = obfuscate(demo_unit, demo_summary, seed=7, fraction=1.0)
    assert p.record.rename_map == (("num", "V0"), ("main", "F0"))
    assert p.source == DEMO_OBF
    assert p.logically_equivalent
    assert deobfuscate(p, Language.JAVA) == demo_unit.source


def test_obfuscate_fraction_zero_is_identity(demo_unit, demo_summary):
    p = obfuscate(demo_unit, demo_summary, seed=7, fraction=0.0)
    assert p.source == demo_unit.source
    assert p.record.rename_map == ()
    assert deobfuscate(p, Language.JAVA) == demo_unit.source


@pytest.mark.parametrize("fraction", [-0.1, 1.5])
def test_obfuscate_fraction_bounds(demo_unit, demo_summary, fraction):
    with pytest.raises(ValueError):
        obfuscate(demo_unit, demo_summary, seed=0, fraction=fraction)


def test_obfuscate_requires_bindings(demo_unit, demo_summary):
    bare = replace(demo_summary, bindings=[])
    with pytest.raises(NothingToObfuscate):
        obfuscate(demo_unit, bare, seed=0, fraction=0.5)


def test_obfuscate_avoids_existing_names():
    unit = make_unit("int f(int V0) {\n    int F0 = V0;\n    return F0 + 1;\n}",
                     Language.JAVA)
    s = summarize_unit(unit)
    p = obfuscate(unit, s, seed=0, fraction=1.0)
    mapping = dict(p.record.rename_map)
    values = list(mapping.values())
    assert len(set(values)) == len(values)
    assert "V0" not in values and "F0" not in values
    assert deobfuscate(p, Language.JAVA) == unit.source


def test_obfuscate_renames_shadowing_scopes_together():
    unit = make_unit("def outer(n):\n    def inner(n):\n        return n + 1\n"
                     "    return inner(n) * n", Language.PYTHON)
    s = summarize_unit(unit)
    assert len(s.bindings) == 4  # outer, inner, and two distinct n bindings
    p = obfuscate(unit, s, seed=1, fraction=1.0)
    assert p.record.rename_map == (("n", "V0"), ("inner", "F0"), ("outer", "F1"))
    assert p.source == ("def F1(V0):\n    def F0(V0):\n        return V0 + 1\n"
                        "    return F0(V0) * V0")
    assert deobfuscate(p, Language.PYTHON) == unit.source


@pytest.mark.parametrize("fraction", [0.3, 0.6, 1.0])
@pytest.mark.parametrize("seed", [0, 11, 99])
def test_obfuscate_round_trip_toy(toy_python, seed, fraction):
    _, units = toy_python
    for unit in units[::25]:
        s = summarize_unit(unit)
        p = obfuscate(unit, s, seed=seed, fraction=fraction)
        assert deobfuscate(p, Language.PYTHON) == unit.source
        # rename map is injective and avoids reserved words
        values = [new for _, new in p.record.rename_map]
        assert len(set(values)) == len(values)
        assert not set(values) & set(reserved_keywords(Language.PYTHON))


def test_deobfuscate_rejects_other_kinds(demo_unit, demo_summary):
    p = line_shuffle(demo_unit, demo_summary, seed=0)
    with pytest.raises(WrongKind):
        deobfuscate(p, Language.JAVA)


# ---------------------------------------------------------- line shuffle


def test_line_shuffle_demo(demo_unit, demo_summary):
    p = line_shuffle(demo_unit, demo_summary, seed=0)
    r = p.record
    assert p.source == DEMO_SWAPPED
    assert not p.logically_equivalent
    assert r.scope_id == 1 and r.span == (0, 1) and r.line_span == (2, 3)
    assert r.permutation == (1, 0)
    assert r.inverted_pairs == ({"a": 0, "b": 1, "reason": "read_then_write"},)


def test_line_shuffle_rejects_independent_statements():
    unit = make_unit("void f() {\n    int a = 1;\n    int b = 2;\n    int c = 3;\n}",
                     Language.JAVA)
    s = summarize_unit(unit)
    with pytest.raises(NoValidShuffle):
        line_shuffle(unit, s, seed=0)


def test_line_shuffle_requires_two_blocks(demo_unit):
    s = summarize("int g() { return 1; }", Language.JAVA)
    unit = make_unit("int g() { return 1; }", Language.JAVA)
    with pytest.raises(NoValidShuffle):
        line_shuffle(unit, s, seed=0)


def test_line_shuffle_max_span_validation(demo_unit, demo_summary):
    with pytest.raises(ValueError):
        line_shuffle(demo_unit, demo_summary, seed=0, max_span=1)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_line_shuffle_record_replays(toy_python, seed):
    from codelect.perturb import _apply_block_permutation
    _, units = toy_python
    for unit in units[::30]:
        s = summarize_unit(unit)
        p = line_shuffle(unit, s, seed=seed)
        r = p.record
        blocks = scope_line_blocks(s, r.scope_id)
        j, k = r.span
        # replay from the record reproduces the emitted source
        assert _apply_block_permutation(unit.source, blocks, j, k, r.permutation) == p.source
        assert r.permutation != tuple(range(len(r.permutation)))
        assert p.source != unit.source
        # chunk multiset preserved; lines outside the window untouched
        old_lines = unit.source.split("\n")
        new_lines = p.source.split("\n")
        lo, hi = blocks[j].start_line, blocks[k].end_line
        assert sorted(old_lines[lo:hi + 1]) == sorted(new_lines[lo:hi + 1])
        assert old_lines[:lo] == new_lines[:lo]
        assert old_lines[hi + 1:] == new_lines[hi + 1:]
        assert len(shuffled_block_multiset(unit.source, blocks, j, k)) == len(r.permutation)
        # every recorded inversion names a real dependence
        window = blocks[j:k + 1]
        for pair in r.inverted_pairs:
            a, b = window[pair["a"] - j], window[pair["b"] - j]
            assert (a.defs & (b.defs | b.uses)) or (a.uses & b.defs) \
                or (a.has_side_effect and b.has_side_effect)
        assert len(r.inverted_pairs) >= 1


# --------------------------------------------------------- token shuffle


def test_token_shuffle_demo(demo_unit, demo_summary):
    p = token_shuffle(demo_unit, demo_summary, seed=3)
    r = p.record
    assert r.body_token_start == 8
    assert r.signature_preserved
    head = "public void main(int num) {\n"
    assert p.source.startswith(head)
    body_old = [t.text for t in demo_summary.tokens[8:]]
    assert sorted(p.source[len(head):].split(" ")) == sorted(body_old)
    assert sorted(r.permutation) == list(range(len(body_old)))
    assert r.permutation != tuple(range(len(body_old)))


def test_token_shuffle_needs_body_tokens():
    unit = make_unit("def f():\n    pass", Language.PYTHON)
    s = summarize_unit(unit)
    with pytest.raises(NothingToShuffle):
        token_shuffle(unit, s, seed=0)


def test_token_shuffle_python_header_kept():
    unit = make_unit("def f(a, b):\n    c = a + b\n    return c", Language.PYTHON)
    s = summarize_unit(unit)
    p = token_shuffle(unit, s, seed=5)
    assert p.source.startswith("def f(a, b):\n")
    assert not p.logically_equivalent


# ----------------------------------------------------- replacement kinds


def test_keyword_replace_demo(demo_unit, demo_summary):
    p = keyword_replace(demo_unit, demo_summary, seed=5, count=2)
    assert p.record.replaced_positions == (
        ((17, 20), "int", "if"), ((32, 37), "while", "false"))
    assert "if num" in p.source and "false (num < 20)" in p.source
    assert not p.logically_equivalent


def test_symbol_replace_demo(demo_unit, demo_summary):
    p = symbol_replace(demo_unit, demo_summary, seed=5, count=2)
    assert p.record.replaced_positions == (
        ((47, 48), ")", ","), ((79, 80), ")", " "))
    for (a, e), old, new in p.record.replaced_positions:
        assert demo_unit.source[a:e] == old
        assert new != old


@pytest.mark.parametrize("maker", [keyword_replace, symbol_replace])
def test_replace_count_zero_is_identity(demo_unit, demo_summary, maker):
    p = maker(demo_unit, demo_summary, seed=5, count=0)
    assert p.source == demo_unit.source
    assert p.record.replaced_positions == ()


@pytest.mark.parametrize("maker", [keyword_replace, symbol_replace])
def test_replace_negative_count(demo_unit, demo_summary, maker):
    with pytest.raises(ValueError):
        maker(demo_unit, demo_summary, seed=5, count=-1)


def test_replace_needs_targets(demo_unit, demo_summary):
    with pytest.raises(NothingToReplace):
        keyword_replace(demo_unit, replace(demo_summary, keyword_spans=[]),
                        seed=0, count=1)
    with pytest.raises(NothingToReplace):
        symbol_replace(demo_unit, replace(demo_summary, symbol_spans=[]),
                       seed=0, count=1)


@pytest.mark.parametrize("maker", [keyword_replace, symbol_replace])
@pytest.mark.parametrize("seed", [0, 7, 42])
def test_replace_positions_sorted_disjoint(toy_java, maker, seed):
    _, units = toy_java
    for unit in units[::30]:
        s = summarize_unit(unit)
        p = maker(unit, s, seed=seed, count=4)
        pos = p.record.replaced_positions
        assert len(pos) == 4
        for (a, e), old, new in pos:
            assert unit.source[a:e] == old and new != old
        starts = [span for span, _, _ in pos]
        assert starts == sorted(starts)
        for (_, e1), (a2, _) in zip(starts, starts[1:]):
            assert e1 <= a2


def test_replace_count_clamped(demo_unit, demo_summary):
    p = keyword_replace(demo_unit, demo_summary, seed=1, count=99)
    assert len(p.record.replaced_positions) == len(demo_summary.keyword_spans)
    assert p.record.count == 99


# ------------------------------------------------------ records and dispatch


def test_record_json_round_trip(demo_unit, demo_summary, toy_python):
    made = [
        obfuscate(demo_unit, demo_summary, seed=7, fraction=1.0),
        line_shuffle(demo_unit, demo_summary, seed=0),
        token_shuffle(demo_unit, demo_summary, seed=3),
        keyword_replace(demo_unit, demo_summary, seed=5, count=2),
        symbol_replace(demo_unit, demo_summary, seed=5, count=2),
    ]
    assert [p.record.kind for p in made] == list(KINDS)
    for p in made:
        rec = p.record.to_json()
        assert PerturbationRecord.from_json(rec) == p.record
        # the wire form is plain json types
        import json
        json.dumps(rec)


def test_apply_kind_dispatch(demo_unit, demo_summary):
    for kind in KINDS:
        p = apply_kind(kind, demo_unit, demo_summary, seed=4,
                       fraction=0.5, count=1)
        assert p.record.kind == kind
        assert p.base_unit_id == demo_unit.id
    with pytest.raises(WrongKind):
        apply_kind("rot13", demo_unit, demo_summary, seed=4)
