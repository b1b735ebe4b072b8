import pytest

from codelect.errors import ParseError
from codelect.pystruct import (
    extract_python_function_spans, name_spans, parse_python_function,
    validate_python_unit,
)

TALLY = """\
def tally(items, start=0):
    import math as m
    global LOG
    total = start
    for item in items:
        total += item
    LOG = m.floor(total)
    return total
"""


def binding_index(parsed):
    return {(b.name, b.scope_path): b for b in parsed.bindings}


def test_basic_facts():
    p = parse_python_function(TALLY)
    nf = p.names
    assert nf.param_names == ["items", "start"]
    assert nf.import_bound == {"m"}
    assert nf.foreign_declared == {"LOG"}
    assert "LOG" not in nf.bindable
    assert "m" not in nf.bindable
    assert {"tally", "items", "start", "total", "item"} <= nf.bindable
    assert nf.kinds["tally"] == "function"
    assert nf.kinds["items"] == "parameter"
    assert nf.kinds["total"] == "variable"


def test_scope_per_suite():
    p = parse_python_function(TALLY)
    # body + for suite
    assert len(p.scopes) == 2
    assert p.scopes[1].parent == 0
    top = [p.statements[i] for i in p.scopes[0].statement_ids]
    assert len(top) == 6


def test_single_function_required():
    with pytest.raises(ParseError):
        parse_python_function("x = 1\n")
    with pytest.raises(ParseError):
        parse_python_function("def a():\n    pass\n\ndef b():\n    pass\n")
    with pytest.raises(ParseError):
        parse_python_function("def broken(:\n    pass\n")


def test_comprehension_target_is_a_distinct_binding():
    src = "def pick(n, xs):\n    hits = [n for n in xs if n > 0]\n    return hits + [n]\n"
    p = parse_python_function(src)
    named_n = [b for b in p.bindings if b.name == "n"]
    assert len(named_n) == 2
    by_scope = {b.scope_path: b for b in named_n}
    assert "unit" in by_scope
    comp = [b for path, b in by_scope.items() if path != "unit"][0]
    outer = by_scope["unit"]
    assert outer.kind == "parameter"
    assert comp.kind == "variable"
    assert not set(outer.spans) & set(comp.spans)
    # the parameter owns the trailing [n]; the comp owns its three slots
    assert len(outer.spans) == 2
    assert len(comp.spans) == 3


def test_nested_function_parameter_is_a_distinct_binding():
    src = "def outer(n):\n    def inner(n):\n        return n + 1\n    return inner(n) * n\n"
    p = parse_python_function(src)
    named_n = sorted((b for b in p.bindings if b.name == "n"),
                     key=lambda b: b.spans[0])
    assert len(named_n) == 2
    assert named_n[0].scope_path == "unit"
    assert len(named_n[0].spans) == 3  # param + two reads on the last line
    assert named_n[1].kind == "parameter"
    assert len(named_n[1].spans) == 2  # inner param + its read


def test_comprehension_first_iterable_resolves_enclosing():
    src = "def spread(n):\n    return [n for n in range(n)]\n"
    p = parse_python_function(src)
    idx = {b.scope_path: b for b in p.bindings if b.name == "n"}
    # range(n) reads the parameter; the target and element belong to the comp
    assert len(idx["unit"].spans) == 2
    comp = [b for path, b in idx.items() if path != "unit"][0]
    assert len(comp.spans) == 2


def test_walrus_target_hoists_out_of_comprehension():
    src = "def seek(xs):\n    found = [y for x in xs if (y := x * 2) > 4]\n    return found, y\n"
    p = parse_python_function(src)
    ys = [b for b in p.bindings if b.name == "y"]
    assert len(ys) == 1
    assert ys[0].scope_path == "unit"
    assert len(ys[0].spans) == 3


def test_keyword_argument_names_excluded():
    src = "def pad(text, width):\n    fill = ' '\n    return text.ljust(width, fillchar=fill)\n"
    # 'fillchar' has no binding; 'fill' keeps its own
    p = parse_python_function(src)
    names = {b.name for b in p.bindings}
    assert "fill" in names
    src2 = "def call(end):\n    print('x', end=end)\n    return end\n"
    p2 = parse_python_function(src2)
    assert "end" not in {b.name for b in p2.bindings}


def test_nested_class_names_left_alone():
    src = """\
def build(seed):
    scale = seed + 1
    class Holder:
        factor = scale
    return Holder().factor + seed
"""
    p = parse_python_function(src)
    names = {b.name for b in p.bindings}
    # scale is read inside the class body: excluded; seed never is
    assert "scale" not in names
    assert "factor" not in names
    assert "seed" in names


def test_except_alias_not_bindable():
    src = """\
def safe(x):
    try:
        return 1 // x
    except ZeroDivisionError as boom:
        print(boom)
        return 0
"""
    p = parse_python_function(src)
    assert "boom" not in {b.name for b in p.bindings}
    assert "boom" in p.names.tracked


def test_spans_slice_to_their_name():
    p = parse_python_function(TALLY)
    for b in p.bindings:
        for a, e in b.spans:
            assert p.source[a:e] == b.name


def test_name_spans_merges_scopes():
    src = "def outer(n):\n    def inner(n):\n        return n + 1\n    return inner(n) * n\n"
    p = parse_python_function(src)
    merged = name_spans(p)
    assert len(merged["n"]) == 5
    assert merged["n"] == sorted(merged["n"])


def test_validate_accepts_and_rejects():
    validate_python_unit("def ok():\n    return 1\n")
    with pytest.raises(ParseError):
        validate_python_unit("return 1\n")


def test_extract_spans_module_layout():
    mod = """\
import os

def alpha(x):
    return x

class Tool:
    def beta(self, y):
        def inner(z):
            return z
        return inner(y)

@staticmethod
def gamma():
    pass
"""
    spans = extract_python_function_spans(mod)
    assert [s.name for s in spans] == ["alpha", "beta", "gamma"]
    beta = spans[1]
    text = mod[beta.start:beta.end]
    assert "def inner" in text  # nested def stays inside its parent
    gamma = spans[2]
    assert mod[gamma.start:gamma.end].startswith("@staticmethod")


def test_extract_spans_bad_syntax():
    with pytest.raises(ParseError):
        extract_python_function_spans("def broken(:\n")
