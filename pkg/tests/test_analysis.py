import pytest

import execsupport
from codelect.analysis import (
    StatementInfo, order_dependent, scope_line_blocks, shuffle_scopes,
    summarize, summarize_unit,
)
from codelect.errors import AnalysisUnavailable
from codelect.langspec import STRUCTURAL_SYMBOLS, Language, keyword_set
from corpusgen import make_unit


def info(defs=(), uses=(), fx=False, index=0):
    return StatementInfo(index=index, line_range=(index, index),
                         defs=frozenset(defs), uses=frozenset(uses),
                         has_side_effect=fx, scope_id=0, char_span=(0, 0))


def test_demo_bindings(demo_summary):
    by_name = {b.name: b for b in demo_summary.bindings}
    assert set(by_name) == {"main", "num"}
    assert by_name["main"].kind == "function"
    assert by_name["num"].kind == "parameter"
    assert len(by_name["num"].use_spans) == 3
    # foreign attribute chain stays out
    for excluded in ("System", "out", "print"):
        assert excluded not in by_name


def test_binding_spans_slice_and_order(demo_summary):
    src = demo_summary.source
    for b in demo_summary.bindings:
        spans = b.all_spans()
        assert spans == sorted(spans)
        for a, e in spans:
            assert src[a:e] == b.name


def test_zero_local_function():
    s = summarize("def f(): return 1", Language.PYTHON)
    assert [(b.name, b.kind) for b in s.bindings] == [("f", "function")]


def test_shadowed_bindings_reported_distinctly():
    s = summarize("def pick(n, xs):\n    hits = [n for n in xs if n > 0]\n    return hits + [n]\n",
                  Language.PYTHON)
    ns = [b for b in s.bindings if b.name == "n"]
    assert len(ns) == 2
    assert ns[0].scope_id != ns[1].scope_id
    all_spans = [sp for b in ns for sp in b.all_spans()]
    assert len(set(all_spans)) == len(all_spans)


def test_def_use_three_assignments():
    s = summarize("void f() { int a = 1; int b = 2; int c = a + b; }", Language.JAVA)
    got = [(sorted(st.defs), sorted(st.uses), st.has_side_effect) for st in s.statements]
    assert got == [(["a"], [], False), (["b"], [], False), (["c"], ["a", "b"], False)]


def test_def_use_demo_loop_body(demo_summary):
    body = [demo_summary.statements[i] for i in demo_summary.scope_statements[1]]
    call, incr = body
    assert call.uses == {"num"} and not call.defs and call.has_side_effect
    assert incr.defs == {"num"} and incr.uses == {"num"}


def test_order_dependent_truth_table():
    a = info(defs={"a"})
    b = info(defs={"b"}, index=1)
    assert not order_dependent(a, b)
    use_then_def = info(uses={"num"}, fx=True)
    redef = info(defs={"num"}, uses={"num"}, index=1)
    assert order_dependent(use_then_def, redef)
    # write-write conflict
    assert order_dependent(info(defs={"x"}), info(defs={"x"}, index=1))
    # read-then-write seen from the left side
    assert order_dependent(info(uses={"x"}), info(defs={"x"}, index=1))
    # two calls never commute
    assert order_dependent(info(fx=True), info(fx=True, index=1))


MIXER = """\
def mixer(a, b):
    total = a + b
    double = total * 2
    alias = total
    print("mix", double)
    total = alias - b
    return total + double
"""

MIXER_INPUTS = [(3, 4), (0, 0), (-2, 7)]


def swap_lines(source, i):
    lines = source.split("\n")
    lines[i], lines[i + 1] = lines[i + 1], lines[i]
    return "\n".join(lines)


def test_order_dependent_never_misses_an_execution_difference():
    # the conservative predicate may flag commuting pairs, but must flag
    # every pair whose swap changes observable behavior
    s = summarize(MIXER, Language.PYTHON)
    body = [s.statements[i] for i in s.scope_statements[0]]
    assert len(body) == 6
    base = execsupport.behavior(MIXER, MIXER_INPUTS)
    checked = 0
    for first, second in zip(body, body[1:]):
        swapped_src = swap_lines(MIXER, first.line_range[0])
        swapped = execsupport.behavior(swapped_src, MIXER_INPUTS)
        if swapped != base:
            assert order_dependent(first, second), (first.index, second.index)
        checked += 1
    assert checked == 5


def test_statement_line_ranges_ordered_within_scope(toy_python):
    _, units = toy_python
    for u in units[:12]:
        s = summarize_unit(u)
        for sid, idxs in s.scope_statements.items():
            stmts = [s.statements[i] for i in idxs]
            for x, y in zip(stmts, stmts[1:]):
                assert x.line_range[1] < y.line_range[0]


def test_same_line_statements_merge_into_one_block():
    s = summarize("def f():\n    a = 1; b = a\n    return b\n", Language.PYTHON)
    blocks = scope_line_blocks(s, 0)
    assert [blk.statement_indexes for blk in blocks] == [(0, 1), (2,)]
    merged = blocks[0]
    assert merged.defs == {"a", "b"}
    assert merged.clean


def test_shuffle_scopes_demo(demo_summary):
    # only the while body offers >= 2 blocks
    assert shuffle_scopes(demo_summary) == [1]
    blocks = scope_line_blocks(demo_summary, 1)
    assert all(blk.clean for blk in blocks)
    assert [blk.start_line for blk in blocks] == [2, 3]


def test_keyword_and_symbol_spans(demo_summary):
    src = demo_summary.source
    kws = keyword_set(Language.JAVA)
    for a, e in demo_summary.keyword_spans:
        assert src[a:e] in kws
    assert len(demo_summary.symbol_spans) > 0
    for a, e in demo_summary.symbol_spans:
        assert src[a:e] in STRUCTURAL_SYMBOLS


@pytest.mark.parametrize("source, language", [
    ("public void broken( { }", Language.JAVA),
    ("def broken(:\n    pass\n", Language.PYTHON),
    ("not code at all {{{", Language.JAVA),
])
def test_unparseable_raises_analysis_unavailable(source, language):
    with pytest.raises(AnalysisUnavailable):
        summarize(source, language)


def test_tokens_reproduce_source(demo_summary, toy_java):
    from codelect.lexing import gaps_are_whitespace
    assert gaps_are_whitespace(demo_summary.source, demo_summary.tokens)
    _, units = toy_java
    for u in units[:9]:
        s = summarize_unit(u)
        assert gaps_are_whitespace(u.source, s.tokens)
