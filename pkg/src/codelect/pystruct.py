"""Structural model of a single Python function, built on the stdlib ast.

Mirrors javastruct: per-suite sibling statements, a scope per suite,
plus the name bindings obfuscation needs. Binding resolution follows
Python's lexical scoping for the scopes a unit can contain — the
function itself, nested defs, lambdas, and comprehensions — so a
comprehension target or nested parameter that shadows an outer name
yields its own binding with disjoint occurrence spans. The routing
honors the evaluation-context rules: nested-def decorators, defaults,
and annotations resolve in the enclosing scope, a comprehension's
first iterable resolves in the enclosing scope, and walrus targets
hoist past comprehension scopes.

Names excluded from renaming entirely (still tracked for def-use):

- `global` / `nonlocal` names: they leak outside the unit, and the
  declaration statements carry no per-name position to rewrite.
- import aliases and `except ... as` names: no Name node at the
  binding site.
- names used as keyword arguments anywhere in the unit: renaming a
  parameter while call sites pass it by keyword would break the call.
- every name appearing inside a nested class body: class-scope lookup
  rules differ, so those occurrences are left untouched wholesale.
- names only ever read (print, len, module refs): foreign.

`match` statements are opaque: one statement, interior never segmented.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field

from .errors import ParseError
from .lexing import KIND_IDENT, KIND_KEYWORD, Token, lex_python, line_start_offsets

_FUNC_NODES = (ast.FunctionDef, ast.AsyncFunctionDef)


@dataclass(frozen=True)
class PyFunctionSpan:
    name: str
    start: int  # char offset of the start of the def's first line (or first decorator's)
    end: int    # char offset of the end of the last line


@dataclass
class PyScope:
    id: int
    parent: int
    statement_ids: list[int] = field(default_factory=list)


@dataclass
class PyStatement:
    id: int
    scope: int
    node: ast.stmt
    first_line: int  # 0-based, inclusive
    last_line: int


@dataclass
class NameFacts:
    bindable: set[str]          # renameable locals/params/functions
    tracked: set[str]           # participate in def-use analysis
    kinds: dict[str, str]       # bindable name -> variable|function|parameter
    param_names: list[str]
    import_bound: set[str]
    foreign_declared: set[str]  # global/nonlocal


@dataclass(frozen=True)
class PyBinding:
    """One resolved name in one scope, with every occurrence span."""
    name: str
    kind: str        # variable | function | parameter
    scope_path: str  # "unit" for the function's own scope, else "s<N>"
    spans: tuple[tuple[int, int], ...]  # sorted; first is the declaration


@dataclass
class ParsedPythonFunction:
    source: str
    func: ast.FunctionDef | ast.AsyncFunctionDef
    tokens: list[Token]
    line_starts: list[int]
    scopes: list[PyScope]
    statements: list[PyStatement]
    names: NameFacts
    bindings: list[PyBinding]


def _stmt_lines(node: ast.stmt) -> tuple[int, int]:
    first = node.lineno
    for deco in getattr(node, "decorator_list", []):
        first = min(first, deco.lineno)
    return first - 1, node.end_lineno - 1


def parse_python_function(code: str) -> ParsedPythonFunction:
    """Parse one standalone (dedented) function definition."""
    try:
        tree = ast.parse(code)
    except SyntaxError as exc:
        raise ParseError(f"syntax error: {exc.msg} (line {exc.lineno})") from exc
    if len(tree.body) != 1 or not isinstance(tree.body[0], _FUNC_NODES):
        raise ParseError("source is not a single function definition")
    func = tree.body[0]
    tokens = lex_python(code)

    scopes: list[PyScope] = []
    statements: list[PyStatement] = []

    def walk_suite(body: list[ast.stmt], parent: int) -> None:
        scope = PyScope(id=len(scopes), parent=parent)
        scopes.append(scope)
        sid = scope.id
        for node in body:
            first, last = _stmt_lines(node)
            stmt = PyStatement(id=len(statements), scope=sid, node=node,
                               first_line=first, last_line=last)
            statements.append(stmt)
            scope.statement_ids.append(stmt.id)
            for suite in _child_suites(node):
                if suite:
                    walk_suite(suite, sid)

    walk_suite(func.body, parent=-1)
    line_starts = line_start_offsets(code)
    parsed = ParsedPythonFunction(
        source=code,
        func=func,
        tokens=tokens,
        line_starts=line_starts,
        scopes=scopes,
        statements=statements,
        names=None,  # filled below; resolver needs the token stream
        bindings=[],
    )
    parsed.bindings = _resolve_bindings(parsed)
    parsed.names = _collect_name_facts(func, parsed.bindings)
    return parsed


def _child_suites(node: ast.stmt) -> list[list[ast.stmt]]:
    if isinstance(node, (ast.If, ast.While, ast.For, ast.AsyncFor)):
        return [node.body, node.orelse]
    if isinstance(node, (ast.With, ast.AsyncWith)):
        return [node.body]
    if isinstance(node, ast.Try):
        suites = [node.body]
        suites.extend(h.body for h in node.handlers)
        suites.append(node.orelse)
        suites.append(node.finalbody)
        return suites
    # FunctionDef/ClassDef bodies and match arms stay opaque
    return []


def _collect_name_facts(func: ast.FunctionDef | ast.AsyncFunctionDef,
                        bindings: list[PyBinding]) -> NameFacts:
    stored: set[str] = set()
    params: set[str] = set()
    defclass: set[str] = set()
    import_bound: set[str] = set()
    foreign: set[str] = set()
    except_bound: set[str] = set()

    top_params = [a.arg for a in _all_args(func.args)]

    for node in ast.walk(func):
        if isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            stored.add(node.id)
        elif isinstance(node, ast.arg):
            params.add(node.arg)
        elif isinstance(node, _FUNC_NODES + (ast.ClassDef,)) and node is not func:
            defclass.add(node.name)
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                import_bound.add(alias.asname or alias.name.split(".")[0])
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            foreign.update(node.names)
        elif isinstance(node, ast.ExceptHandler) and node.name:
            except_bound.add(node.name)

    # tracked keeps every name known to be bound somewhere (def-use
    # analysis must see names the renamer refuses to touch)
    every_bound = {func.name} | stored | params | defclass
    tracked = every_bound | import_bound | except_bound | foreign
    bindable = {b.name for b in bindings}
    kinds: dict[str, str] = {}
    for b in sorted(bindings, key=lambda b: b.spans[0]):
        kinds.setdefault(b.name, b.kind)
    return NameFacts(bindable=bindable, tracked=tracked, kinds=kinds,
                     param_names=top_params, import_bound=import_bound,
                     foreign_declared=foreign)


def _all_args(args: ast.arguments) -> list[ast.arg]:
    out = list(args.posonlyargs) + list(args.args) + list(args.kwonlyargs)
    if args.vararg:
        out.append(args.vararg)
    if args.kwarg:
        out.append(args.kwarg)
    return out


_COMP_NODES = (ast.ListComp, ast.SetComp, ast.GeneratorExp, ast.DictComp)


@dataclass
class _RScope:
    parent: int | None
    kind: str  # unit | function | lambda | comp
    locals: dict[str, str] = field(default_factory=dict)  # name -> role


class _Resolver:
    """Two-phase lexical resolution: one routed walk records where every
    name occurrence sits and which scope each binding lands in, then a
    chain lookup attributes occurrences to bindings."""

    def __init__(self, parsed: ParsedPythonFunction):
        self.parsed = parsed
        self.scopes: list[_RScope] = []
        self.occs: list[tuple[int | None, str, tuple[int, int]]] = []
        self.excluded: set[str] = set()

    def _span(self, node) -> tuple[int, int]:
        a = self.parsed.line_starts[node.lineno - 1] + node.col_offset
        name = node.id if isinstance(node, ast.Name) else node.arg
        return (a, a + len(name))

    def _bind(self, scope: int | None, name: str, role: str) -> None:
        if scope is None:
            self.excluded.add(name)
            return
        self.scopes[scope].locals.setdefault(name, role)

    def _hoist(self, scope: int | None) -> int | None:
        while scope is not None and self.scopes[scope].kind == "comp":
            scope = self.scopes[scope].parent
        return scope

    def _def_token_span(self, node) -> tuple[int, int] | None:
        tok = _def_name_token(self.parsed, node)
        return (tok.start, tok.end) if tok else None

    def _enter_function(self, node, scope: int | None, name_site) -> None:
        if name_site is not None:
            self._bind(scope, node.name, "function")
            self.occs.append((scope, node.name, name_site))
        args = node.args
        for dec in getattr(node, "decorator_list", []):
            self.visit(dec, scope)
        for d in args.defaults:
            self.visit(d, scope)
        for d in args.kw_defaults:
            if d is not None:
                self.visit(d, scope)
        for arg in _all_args(args):
            if arg.annotation is not None:
                self.visit(arg.annotation, scope)
        if getattr(node, "returns", None) is not None:
            self.visit(node.returns, scope)
        inner = len(self.scopes)
        self.scopes.append(_RScope(parent=scope, kind="function"))
        for arg in _all_args(args):
            self._bind(inner, arg.arg, "parameter")
            self.occs.append((inner, arg.arg, self._span(arg)))
        body = node.body if isinstance(node.body, list) else [node.body]
        for stmt in body:
            self.visit(stmt, inner)

    def _enter_comp(self, node, scope: int | None) -> None:
        inner = len(self.scopes)
        self.scopes.append(_RScope(parent=scope, kind="comp"))
        gens = node.generators
        self.visit(gens[0].iter, scope)  # first iterable: enclosing scope
        for i, gen in enumerate(gens):
            self.visit(gen.target, inner)
            if i > 0:
                self.visit(gen.iter, inner)
            for cond in gen.ifs:
                self.visit(cond, inner)
        if isinstance(node, ast.DictComp):
            self.visit(node.key, inner)
            self.visit(node.value, inner)
        else:
            self.visit(node.elt, inner)

    def _poison_class(self, node: ast.ClassDef, scope: int | None) -> None:
        # class-body lookup rules differ from function nesting; leave
        # every name seen inside untouched rather than model them
        for sub in ast.walk(node):
            if isinstance(sub, ast.Name):
                self.excluded.add(sub.id)
            elif isinstance(sub, ast.arg):
                self.excluded.add(sub.arg)
            elif isinstance(sub, _FUNC_NODES + (ast.ClassDef,)) and sub is not node:
                self.excluded.add(sub.name)
        site = self._def_token_span(node)
        if site is not None:
            self._bind(scope, node.name, "function")
            self.occs.append((scope, node.name, site))

    def visit(self, node, scope: int | None) -> None:
        if isinstance(node, ast.Name):
            if isinstance(node.ctx, (ast.Store, ast.Del)):
                self._bind(scope, node.id, "variable")
            self.occs.append((scope, node.id, self._span(node)))
        elif isinstance(node, _FUNC_NODES):
            self._enter_function(node, scope, self._def_token_span(node))
        elif isinstance(node, ast.Lambda):
            self._enter_function(node, scope, None)
        elif isinstance(node, _COMP_NODES):
            self._enter_comp(node, scope)
        elif isinstance(node, ast.ClassDef):
            self._poison_class(node, scope)
        elif isinstance(node, ast.NamedExpr):
            target_scope = self._hoist(scope)
            self._bind(target_scope, node.target.id, "variable")
            self.occs.append((scope, node.target.id, self._span(node.target)))
            self.visit(node.value, scope)
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            self.excluded.update(node.names)
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                self.excluded.add(alias.asname or alias.name.split(".")[0])
        elif isinstance(node, ast.keyword):
            if node.arg is not None:
                self.excluded.add(node.arg)
            self.visit(node.value, scope)
        elif isinstance(node, ast.ExceptHandler):
            if node.name:
                self.excluded.add(node.name)
            for child in ast.iter_child_nodes(node):
                self.visit(child, scope)
        else:
            for child in ast.iter_child_nodes(node):
                self.visit(child, scope)

    def run(self) -> list[PyBinding]:
        func = self.parsed.func
        self.scopes.append(_RScope(parent=None, kind="unit"))
        site = self._def_token_span(func)
        if site is not None:
            self._bind(0, func.name, "function")
            self.occs.append((0, func.name, site))
        # the unit's own decorators / defaults / annotations evaluate
        # outside the unit; scope None resolves every name as foreign
        for dec in func.decorator_list:
            self.visit(dec, None)
        for d in func.args.defaults:
            self.visit(d, None)
        for d in func.args.kw_defaults:
            if d is not None:
                self.visit(d, None)
        for arg in _all_args(func.args):
            if arg.annotation is not None:
                self.visit(arg.annotation, None)
        if func.returns is not None:
            self.visit(func.returns, None)
        for arg in _all_args(func.args):
            self._bind(0, arg.arg, "parameter")
            self.occs.append((0, arg.arg, self._span(arg)))
        for stmt in func.body:
            self.visit(stmt, 0)

        grouped: dict[tuple[int, str], set[tuple[int, int]]] = {}
        for scope, name, span in self.occs:
            if name in self.excluded:
                continue
            t = scope
            while t is not None and name not in self.scopes[t].locals:
                t = self.scopes[t].parent
            if t is None:
                continue  # builtin / module-level read
            grouped.setdefault((t, name), set()).add(span)

        out: list[PyBinding] = []
        for (scope, name), spans in grouped.items():
            ordered = tuple(sorted(spans))
            for a, b in ordered:
                if self.parsed.source[a:b] != name:
                    raise ParseError(f"span misalignment for {name!r} at offset {a}")
            path = "unit" if scope == 0 else f"s{scope}"
            out.append(PyBinding(name=name, kind=self.scopes[scope].locals[name],
                                 scope_path=path, spans=ordered))
        out.sort(key=lambda b: (b.name, b.spans[0]))
        return out


def _resolve_bindings(parsed: ParsedPythonFunction) -> list[PyBinding]:
    return _Resolver(parsed).run()


def name_spans(parsed: ParsedPythonFunction) -> dict[str, list[tuple[int, int]]]:
    """Character spans of every occurrence of each bindable name, all
    scopes merged — the view the grouped renamer consumes."""
    spans: dict[str, list[tuple[int, int]]] = {}
    for b in parsed.bindings:
        spans.setdefault(b.name, []).extend(b.spans)
    for ss in spans.values():
        ss.sort()
    return spans


def _def_name_token(parsed: ParsedPythonFunction, node: ast.stmt) -> Token | None:
    """The identifier token after this node's def/class keyword."""
    kw_offset = parsed.line_starts[node.lineno - 1] + node.col_offset
    prev_was_kw = False
    for tok in parsed.tokens:
        if tok.start < kw_offset:
            continue
        if tok.kind == KIND_KEYWORD and tok.text in ("def", "class"):
            prev_was_kw = True
            continue
        if prev_was_kw and tok.kind == KIND_IDENT:
            return tok if tok.text == node.name else None
    return None


def validate_python_unit(code: str) -> None:
    """Raise ParseError unless code is one standalone function."""
    parse_python_function(code)


def extract_python_function_spans(file_source: str) -> list[PyFunctionSpan]:
    """Top-level functions plus methods of top-level classes. Nested
    defs stay inside their parent."""
    try:
        tree = ast.parse(file_source)
    except SyntaxError as exc:
        raise ParseError(f"syntax error: {exc.msg} (line {exc.lineno})") from exc
    starts = line_start_offsets(file_source)
    spans: list[PyFunctionSpan] = []

    def add(node: ast.stmt) -> None:
        first, last = _stmt_lines(node)
        end_of_last = (starts[last + 1] - 1) if last + 1 < len(starts) else len(file_source)
        spans.append(PyFunctionSpan(name=node.name, start=starts[first], end=end_of_last))

    for node in tree.body:
        if isinstance(node, _FUNC_NODES):
            add(node)
        elif isinstance(node, ast.ClassDef):
            for member in node.body:
                if isinstance(member, _FUNC_NODES):
                    add(member)
    return spans
