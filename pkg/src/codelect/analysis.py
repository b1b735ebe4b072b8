"""Syntactic facts for perturbation: identifier bindings with spans,
statement segmentation with def/use sets, and the order-dependence
predicate.

Statements are reported per scope (sibling groups), flattened in
document order; line ranges are non-overlapping within a scope, while a
compound statement's range necessarily covers its nested scopes'
statements. Def/use sets of a compound statement are the union over
everything inside it, because reordering moves the whole block.

The side-effect rule is deliberately conservative: any call, any store
through an array/field/subscript, any write to non-local state, and any
control-transfer statement (return/break/continue/throw/raise) marks
the statement. Two side-effecting statements are always order
dependent. False positives only cost us shuffle candidates; a false
negative would let a behavior-changing shuffle pass as equivalent.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

from . import javastruct, pystruct
from .errors import AnalysisUnavailable, LexError, ParseError
from .langspec import STRUCTURAL_SYMBOLS, Language
from .lexing import (
    KIND_COMMENT,
    KIND_IDENT,
    KIND_KEYWORD,
    KIND_OP,
    Token,
    gaps_are_whitespace,
    lex,
)

_JAVA_ASSIGN_OPS = javastruct._ASSIGN_OPS
_CONTROL_KEYWORDS = {"return", "break", "continue", "throw", "assert", "yield"}


@dataclass(frozen=True)
class IdentifierBinding:
    name: str
    kind: str  # variable | function | parameter
    declaration_span: tuple[int, int]
    use_spans: tuple[tuple[int, int], ...]
    scope_id: str

    def all_spans(self) -> list[tuple[int, int]]:
        return [self.declaration_span, *self.use_spans]


@dataclass(frozen=True)
class StatementInfo:
    index: int
    line_range: tuple[int, int]  # 0-based, inclusive
    defs: frozenset[str]
    uses: frozenset[str]
    has_side_effect: bool
    scope_id: int
    char_span: tuple[int, int]


@dataclass(frozen=True)
class LineBlock:
    statement_indexes: tuple[int, ...]
    start_line: int
    end_line: int
    defs: frozenset[str]
    uses: frozenset[str]
    has_side_effect: bool
    clean: bool  # block owns its lines: no outside code token shares them


@dataclass
class SyntaxSummary:
    unit_id: str
    language: Language
    source: str
    bindings: list[IdentifierBinding]
    statements: list[StatementInfo]
    tokens: list[Token]
    keyword_spans: list[tuple[int, int]]
    symbol_spans: list[tuple[int, int]]
    scope_statements: dict[int, list[int]]  # scope id -> statement indexes


def order_dependent(a: StatementInfo, b: StatementInfo) -> bool:
    """True when swapping a before-b is not guaranteed behavior-preserving."""
    if a.defs & (b.defs | b.uses):
        return True
    if a.uses & b.defs:
        return True
    return a.has_side_effect and b.has_side_effect


def summarize(source: str, language: Language, unit_id: str = "") -> SyntaxSummary:
    """Full syntactic summary of one unit. Raises AnalysisUnavailable."""
    try:
        if language is Language.JAVA:
            summary = _summarize_java(source, unit_id)
        else:
            summary = _summarize_python(source, unit_id)
    except (ParseError, LexError) as exc:
        raise AnalysisUnavailable(str(exc)) from exc
    if not gaps_are_whitespace(source, summary.tokens):
        raise AnalysisUnavailable("token stream does not reproduce source")
    return summary


def summarize_unit(unit) -> SyntaxSummary:
    return summarize(unit.source, Language.parse(unit.language), unit.id)


def bind_identifiers(unit) -> list[IdentifierBinding]:
    return summarize_unit(unit).bindings


def def_use(unit) -> list[StatementInfo]:
    return summarize_unit(unit).statements


def _token_kind_spans(tokens: list[Token]) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    keywords = [(t.start, t.end) for t in tokens if t.kind == KIND_KEYWORD]
    symbols = [(t.start, t.end) for t in tokens
               if t.kind == KIND_OP and t.text in STRUCTURAL_SYMBOLS]
    return keywords, symbols


# ---------------------------------------------------------------- Java

def _summarize_java(source: str, unit_id: str) -> SyntaxSummary:
    parsed = javastruct.parse_java_method(source)
    ct = parsed.code_tokens

    locals_found = javastruct.local_declarations(parsed)
    decl_indices: dict[int, str] = {idx: name for name, idx in locals_found}
    bindable: dict[str, str] = {}
    bindable[parsed.name] = "function"
    for name in parsed.param_names:
        bindable.setdefault(name, "parameter")
    for name, _ in locals_found:
        bindable.setdefault(name, "variable")

    occurrences: dict[str, list[tuple[int, int]]] = {n: [] for n in bindable}
    for i, t in enumerate(ct):
        if t.kind != KIND_IDENT or t.text not in bindable:
            continue
        if i > 0 and ct[i - 1].text == ".":
            continue  # attribute access on a foreign object
        occurrences[t.text].append((t.start, t.end))

    bindings = []
    for name in sorted(occurrences):
        spans = occurrences[name]
        if not spans:
            continue
        bindings.append(IdentifierBinding(
            name=name, kind=bindable[name], declaration_span=spans[0],
            use_spans=tuple(spans[1:]), scope_id="unit"))

    tracked = set(bindable)
    raw_stmts = sorted(parsed.statements, key=lambda s: s.first)
    statements: list[StatementInfo] = []
    scope_statements: dict[int, list[int]] = {s.id: [] for s in parsed.scopes}
    for new_index, raw in enumerate(raw_stmts):
        defs, uses, effect = _java_stmt_facts(ct, raw.first, raw.last, tracked, decl_indices)
        info = StatementInfo(
            index=new_index,
            line_range=(ct[raw.first].line, ct[raw.last].line),
            defs=frozenset(defs), uses=frozenset(uses), has_side_effect=effect,
            scope_id=raw.scope,
            char_span=(ct[raw.first].start, ct[raw.last].end))
        statements.append(info)
        scope_statements[raw.scope].append(new_index)

    keywords, symbols = _token_kind_spans(parsed.tokens)
    return SyntaxSummary(unit_id=unit_id, language=Language.JAVA, source=source,
                         bindings=bindings, statements=statements, tokens=parsed.tokens,
                         keyword_spans=keywords, symbol_spans=symbols,
                         scope_statements=scope_statements)


def _java_stmt_facts(ct: list[Token], first: int, last: int, tracked: set[str],
                     decl_indices: dict[int, str]) -> tuple[set[str], set[str], bool]:
    defs: set[str] = set()
    uses: set[str] = set()
    effect = False

    for i in range(first, last + 1):
        t = ct[i]
        tx = t.text
        nxt = ct[i + 1].text if i + 1 <= last else ""
        prv = ct[i - 1].text if i - 1 >= first else ""

        if t.kind == KIND_KEYWORD:
            if tx in _CONTROL_KEYWORDS:
                effect = True
            elif tx == "new":
                effect = effect or _new_is_constructor(ct, i, last)
            elif tx in ("this", "super") and nxt == "(":
                effect = True
            continue
        if t.kind != KIND_IDENT:
            if tx in _JAVA_ASSIGN_OPS or tx in ("++", "--"):
                # store through something other than a plain local name
                if prv == "]":
                    effect = True
                elif i - 2 >= first and ct[i - 1].kind == KIND_IDENT and ct[i - 2].text == ".":
                    effect = True
            continue

        if nxt == "(":
            effect = True  # call (method, recursive, or foreign)
        if prv == ".":
            continue  # attribute member, not a local reference
        if tx not in tracked:
            continue

        wrote = False
        read = False
        if i in decl_indices and decl_indices[i] == tx:
            wrote = True
        elif nxt == "=":
            wrote = True
        elif nxt in _JAVA_ASSIGN_OPS:  # compound assignment reads too
            wrote = True
            read = True
        if nxt in ("++", "--") or prv in ("++", "--"):
            wrote = True
            read = True
        if not wrote:
            read = True
        if wrote:
            defs.add(tx)
        if read:
            uses.add(tx)
    return defs, uses, effect


def _new_is_constructor(ct: list[Token], i: int, last: int) -> bool:
    j = i + 1
    while j <= last and (ct[j].kind in (KIND_IDENT, KIND_KEYWORD) or ct[j].text in (".", "<", ">", ",")):
        j += 1
    return j <= last and ct[j].text == "("


# -------------------------------------------------------------- Python

def _summarize_python(source: str, unit_id: str) -> SyntaxSummary:
    parsed = pystruct.parse_python_function(source)
    bindings = [
        IdentifierBinding(
            name=b.name, kind=b.kind, declaration_span=b.spans[0],
            use_spans=tuple(b.spans[1:]), scope_id=b.scope_path)
        for b in parsed.bindings
    ]

    tracked = parsed.names.tracked
    starts = parsed.line_starts
    raw_stmts = sorted(parsed.statements, key=lambda s: (s.first_line, s.node.col_offset))
    statements: list[StatementInfo] = []
    scope_statements: dict[int, list[int]] = {s.id: [] for s in parsed.scopes}
    for new_index, raw in enumerate(raw_stmts):
        defs, uses, effect = _py_stmt_facts(raw.node, tracked, parsed.names.bindable)
        span_start = starts[raw.first_line]
        span_end = (starts[raw.last_line + 1] - 1) if raw.last_line + 1 < len(starts) else len(parsed.source)
        info = StatementInfo(
            index=new_index,
            line_range=(raw.first_line, raw.last_line),
            defs=frozenset(defs), uses=frozenset(uses), has_side_effect=effect,
            scope_id=raw.scope,
            char_span=(span_start, span_end))
        statements.append(info)
        scope_statements[raw.scope].append(new_index)

    keywords, symbols = _token_kind_spans(parsed.tokens)
    return SyntaxSummary(unit_id=unit_id, language=Language.PYTHON, source=source,
                         bindings=bindings, statements=statements, tokens=parsed.tokens,
                         keyword_spans=keywords, symbol_spans=symbols,
                         scope_statements=scope_statements)


_PY_EFFECT_NODES = (ast.Return, ast.Break, ast.Continue, ast.Raise, ast.Assert,
                    ast.Yield, ast.YieldFrom, ast.Await, ast.Global, ast.Nonlocal,
                    ast.Import, ast.ImportFrom, ast.Delete)


def _py_stmt_facts(stmt: ast.stmt, tracked: set[str],
                   bindable: set[str]) -> tuple[set[str], set[str], bool]:
    defs: set[str] = set()
    uses: set[str] = set()
    effect = False
    for node in ast.walk(stmt):
        if isinstance(node, ast.Name):
            if isinstance(node.ctx, (ast.Store, ast.Del)):
                if node.id in tracked:
                    defs.add(node.id)
                if node.id not in bindable:
                    effect = True  # write escapes the local scope
            elif node.id in tracked:
                uses.add(node.id)
        elif isinstance(node, ast.Call):
            effect = True
        elif isinstance(node, (ast.Subscript, ast.Attribute)):
            if isinstance(node.ctx, (ast.Store, ast.Del)):
                effect = True
        elif isinstance(node, ast.AugAssign):
            if isinstance(node.target, ast.Name):
                if node.target.id in tracked:
                    uses.add(node.target.id)
            else:
                effect = True
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            effect = True
            for alias in node.names:
                bound = alias.asname or alias.name.split(".")[0]
                if bound in tracked:
                    defs.add(bound)
        elif isinstance(node, ast.ExceptHandler):
            if node.name and node.name in tracked:
                defs.add(node.name)
            effect = True
        elif isinstance(node, _PY_EFFECT_NODES):
            effect = True
    return defs, uses, effect


# ----------------------------------------------------------- line blocks

def scope_line_blocks(summary: SyntaxSummary, scope_id: int) -> list[LineBlock]:
    """The scope's sibling statements merged into whole-line blocks.
    Statements sharing a physical line merge; a block is `clean` when no
    code token from outside it sits on its lines."""
    indexes = summary.scope_statements.get(scope_id, [])
    if not indexes:
        return []
    stmts = [summary.statements[i] for i in indexes]

    groups: list[list[StatementInfo]] = [[stmts[0]]]
    for st in stmts[1:]:
        if st.line_range[0] <= groups[-1][-1].line_range[1]:
            groups[-1].append(st)
        else:
            groups.append([st])

    blocks = []
    for group in groups:
        start_line = min(s.line_range[0] for s in group)
        end_line = max(s.line_range[1] for s in group)
        lo = min(s.char_span[0] for s in group)
        hi = max(s.char_span[1] for s in group)
        clean = True
        for t in summary.tokens:
            if t.kind == KIND_COMMENT:
                continue
            if start_line <= t.line <= end_line and not (lo <= t.start and t.end <= hi):
                clean = False
                break
        defs: set[str] = set()
        uses: set[str] = set()
        effect = False
        for s in group:
            defs |= s.defs
            uses |= s.uses
            effect = effect or s.has_side_effect
        blocks.append(LineBlock(
            statement_indexes=tuple(s.index for s in group),
            start_line=start_line, end_line=end_line,
            defs=frozenset(defs), uses=frozenset(uses),
            has_side_effect=effect, clean=clean))
    return blocks


def shuffle_scopes(summary: SyntaxSummary) -> list[int]:
    """Scope ids holding at least 2 consecutive clean line blocks."""
    out = []
    for scope_id in sorted(summary.scope_statements):
        blocks = scope_line_blocks(summary, scope_id)
        run = 0
        for b in blocks:
            run = run + 1 if b.clean else 0
            if run >= 2:
                out.append(scope_id)
                break
    return out
