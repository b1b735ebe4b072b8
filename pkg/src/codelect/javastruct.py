"""Structural model of a single Java method.

Built on the token stream from `lexing.lex_java`, this module extracts
methods from class files, validates that a unit is one well-formed
method, segments its body into sibling statements per brace scope, and
locates local-variable declarations. It is a shape parser, not a
compiler front end: it tracks brackets, statement boundaries, and
declaration patterns, and rejects structurally broken input with
ParseError.

Scope model: every braced block that holds sibling statements (method
body, loop/if/else bodies, try/catch/finally, bare blocks,
synchronized) is a scope. Unbraced single-statement bodies are folded
into their parent statement. `switch` bodies are opaque: the switch is
one statement and its interior is never segmented.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import LexError, ParseError
from .lexing import KIND_COMMENT, KIND_IDENT, KIND_KEYWORD, Token, lex_java, line_start_offsets

_MODIFIERS = {
    "public", "private", "protected", "static", "final", "abstract",
    "synchronized", "native", "strictfp", "default", "transient", "volatile",
}
_TYPE_KEYWORDS = {"class", "interface", "enum", "record"}
_PRIMITIVES = {"void", "int", "long", "short", "byte", "char", "boolean", "float", "double"}
_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="}
_OPEN_FOR = {")": "(", "]": "[", "}": "{"}


@dataclass(frozen=True)
class MethodSpan:
    name: str
    start: int  # char offset of the start of the member's first line
    end: int    # char offset one past the closing brace


@dataclass
class Scope:
    id: int
    parent: int  # -1 for the method body
    open_index: int   # code-token index of '{'
    close_index: int  # code-token index of '}'
    statement_ids: list[int] = field(default_factory=list)


@dataclass
class RawStatement:
    id: int
    scope: int
    first: int  # code-token index, inclusive
    last: int   # inclusive
    kind: str


@dataclass
class ParsedJavaMethod:
    source: str
    tokens: list[Token]        # full stream, comments included
    code_tokens: list[Token]   # comments stripped; all indices below point here
    name: str
    name_index: int
    param_names: list[str]
    param_indices: list[int]
    body_open: int
    body_close: int
    scopes: list[Scope]
    statements: list[RawStatement]
    pairs: dict[int, int]      # open-bracket index -> close-bracket index


def match_brackets(toks: list[Token]) -> dict[int, int]:
    """Pair (), [], {} by index. Raises ParseError on imbalance."""
    pairs: dict[int, int] = {}
    stack: list[tuple[str, int]] = []
    for i, t in enumerate(toks):
        if t.text in "([{":
            stack.append((t.text, i))
        elif t.text in ")]}":
            if not stack or stack[-1][0] != _OPEN_FOR[t.text]:
                raise ParseError(f"unbalanced {t.text!r} at offset {t.start}")
            pairs[stack.pop()[1]] = i
    if stack:
        t = toks[stack[-1][1]]
        raise ParseError(f"unclosed {t.text!r} at offset {t.start}")
    return pairs


def _skip_angles(toks: list[Token], i: int) -> int:
    """From toks[i] == '<', return index past the balanced '>' (generics).

    Falls back to i+1 when the segment does not close (then '<' was a
    comparison, not generics)."""
    depth = 0
    j = i
    while j < len(toks):
        tx = toks[j].text
        if tx == "<":
            depth += 1
        elif tx == ">":
            depth -= 1
            if depth == 0:
                return j + 1
        elif tx == ">>":
            depth -= 2
            if depth <= 0:
                return j + 1
        elif tx == ">>>":
            depth -= 3
            if depth <= 0:
                return j + 1
        elif tx in (";", "{", "}") or toks[j].kind == KIND_KEYWORD and tx not in ("extends", "super"):
            if toks[j].kind == KIND_KEYWORD and tx in _PRIMITIVES:
                j += 1
                continue
            return i + 1
        j += 1
    return i + 1


_TYPE_INNER_OK = {"?", ",", ".", "[", "]", "<", ">", ">>", ">>>", "&", "extends", "super"}


def _typeish_angles(toks: list[Token], i: int, end: int) -> bool:
    """True when toks[i:end] (from '<' to past '>') reads like generic args."""
    for t in toks[i:end]:
        if t.kind in (KIND_IDENT,):
            continue
        if t.text in _TYPE_INNER_OK or t.text in _PRIMITIVES:
            continue
        return False
    return True


def _skip_type(toks: list[Token], i: int) -> int | None:
    """Return index past one type reference starting at i, else None."""
    n = len(toks)
    if i >= n:
        return None
    t = toks[i]
    if t.kind == KIND_KEYWORD and t.text in _PRIMITIVES:
        i += 1
    elif t.kind == KIND_IDENT:
        i += 1
        while i + 1 < n and toks[i].text == "." and toks[i + 1].kind == KIND_IDENT:
            i += 2
        if i < n and toks[i].text == "<":
            j = _skip_angles(toks, i)
            if j > i + 1 and _typeish_angles(toks, i, j):
                i = j
    else:
        return None
    while i + 1 < n and toks[i].text == "[" and toks[i + 1].text == "]":
        i += 2
    return i


def _skip_annotations_and_modifiers(toks: list[Token], i: int, pairs: dict[int, int]) -> int:
    while i < len(toks):
        t = toks[i]
        if t.text == "@":
            i += 1
            if i < len(toks) and toks[i].kind == KIND_IDENT:
                i += 1
                while i + 1 < len(toks) and toks[i].text == "." and toks[i + 1].kind == KIND_IDENT:
                    i += 2
                if i < len(toks) and toks[i].text == "(":
                    i = pairs[i] + 1
        elif t.kind == KIND_KEYWORD and t.text in _MODIFIERS:
            i += 1
        else:
            break
    return i


def _split_top_commas(toks: list[Token], lo: int, hi: int) -> list[tuple[int, int]]:
    """Split toks[lo:hi] on commas at bracket/angle depth 0."""
    parts: list[tuple[int, int]] = []
    depth = 0
    angle = 0
    start = lo
    for i in range(lo, hi):
        tx = toks[i].text
        if tx in "([{":
            depth += 1
        elif tx in ")]}":
            depth -= 1
        elif tx == "<":
            angle += 1
        elif tx == ">" and angle:
            angle -= 1
        elif tx == ">>" and angle:
            angle = max(0, angle - 2)
        elif tx == "," and depth == 0 and angle == 0:
            parts.append((start, i))
            start = i + 1
    parts.append((start, hi))
    return [(a, b) for a, b in parts if b > a] if hi > lo else []


def _parse_params(toks: list[Token], open_paren: int, close_paren: int) -> tuple[list[str], list[int]]:
    names: list[str] = []
    indices: list[int] = []
    for lo, hi in _split_top_commas(toks, open_paren + 1, close_paren):
        idx = None
        for j in range(hi - 1, lo - 1, -1):
            if toks[j].kind == KIND_IDENT:
                idx = j
                break
        if idx is None:
            raise ParseError(f"parameter without a name near offset {toks[lo].start}")
        names.append(toks[idx].text)
        indices.append(idx)
    return names, indices


class _BodyWalker:
    def __init__(self, toks: list[Token], pairs: dict[int, int]):
        self.toks = toks
        self.pairs = pairs
        self.scopes: list[Scope] = []
        self.statements: list[RawStatement] = []

    def walk_scope(self, open_index: int, parent: int) -> int:
        scope = Scope(id=len(self.scopes), parent=parent, open_index=open_index,
                      close_index=self.pairs[open_index])
        self.scopes.append(scope)
        i = open_index + 1
        while i < scope.close_index:
            first = i
            i, kind = self.parse_statement(i, scope.id, scope.close_index)
            stmt = RawStatement(id=len(self.statements), scope=scope.id,
                                first=first, last=i - 1, kind=kind)
            self.statements.append(stmt)
            scope.statement_ids.append(stmt.id)
        return scope.close_index + 1

    def parse_statement(self, i: int, scope_id: int, limit: int) -> tuple[int, str]:
        toks = self.toks
        t = toks[i]
        tx = t.text
        if tx == ";":
            return i + 1, "empty"
        if tx == "{":
            return self.walk_scope(i, scope_id), "block"
        if t.kind == KIND_KEYWORD:
            if tx == "if":
                i = self._condition_then_body(i, scope_id)
                while i < limit and toks[i].text == "else":
                    if toks[i + 1].text == "if":
                        i = self._condition_then_body(i + 1, scope_id)
                    else:
                        i = self._body(i + 1, scope_id, limit)
                return i, "if"
            if tx in ("while", "for", "synchronized"):
                return self._condition_then_body(i, scope_id, allow_empty=(tx == "for")), tx
            if tx == "do":
                i = self._body(i + 1, scope_id, limit)
                if i >= limit or toks[i].text != "while":
                    raise ParseError(f"do without while near offset {t.start}")
                i = self._parens_end(i + 1)
                return self._expect_semi(i, limit), "do"
            if tx == "switch":
                i = self._parens_end(i + 1)
                if i >= limit or toks[i].text != "{":
                    raise ParseError(f"switch without body near offset {t.start}")
                return self.pairs[i] + 1, "switch"
            if tx == "try":
                i += 1
                if i < limit and toks[i].text == "(":
                    i = self.pairs[i] + 1  # resources
                if i >= limit or toks[i].text != "{":
                    raise ParseError(f"try without block near offset {t.start}")
                i = self.walk_scope(i, scope_id)
                while i < limit and toks[i].text == "catch":
                    i = self._parens_end(i + 1)
                    if i >= limit or toks[i].text != "{":
                        raise ParseError("catch without block")
                    i = self.walk_scope(i, scope_id)
                if i < limit and toks[i].text == "finally":
                    if toks[i + 1].text != "{":
                        raise ParseError("finally without block")
                    i = self.walk_scope(i + 1, scope_id)
                return i, "try"
            if tx in ("return", "throw", "break", "continue", "assert", "yield"):
                return self._scan_simple(i, limit), tx
            if tx in _TYPE_KEYWORDS:
                raise ParseError(f"local type declarations unsupported at offset {t.start}")
        if t.kind == KIND_IDENT and i + 1 < limit and toks[i + 1].text == ":":
            raise ParseError(f"labeled statement unsupported at offset {t.start}")
        return self._scan_simple(i, limit), "simple"

    def _condition_then_body(self, i: int, scope_id: int, allow_empty: bool = False) -> int:
        kw = self.toks[i]
        j = i + 1
        if j >= len(self.toks) or self.toks[j].text != "(":
            raise ParseError(f"{kw.text} without condition at offset {kw.start}")
        close = self.pairs[j]
        if close == j + 1 and not allow_empty:
            raise ParseError(f"empty {kw.text} condition at offset {kw.start}")
        return self._body(close + 1, scope_id, len(self.toks))

    def _body(self, i: int, scope_id: int, limit: int) -> int:
        if i >= limit:
            raise ParseError("missing statement body")
        if self.toks[i].text == "{":
            return self.walk_scope(i, scope_id)
        i, _ = self.parse_statement(i, scope_id, limit)
        return i

    def _parens_end(self, i: int) -> int:
        if i >= len(self.toks) or self.toks[i].text != "(":
            raise ParseError("expected '('")
        return self.pairs[i] + 1

    def _expect_semi(self, i: int, limit: int) -> int:
        if i >= limit or self.toks[i].text != ";":
            raise ParseError("missing ';'")
        return i + 1

    def _scan_simple(self, i: int, limit: int) -> int:
        """Consume one semicolon-terminated statement, tracking brackets so
        array initializers and lambda bodies stay inside it."""
        toks = self.toks
        start = i
        while i < limit:
            tx = toks[i].text
            if tx in "([{":
                i = self.pairs[i] + 1
                continue
            if tx == ";":
                if toks[i - 1].text in _ASSIGN_OPS:
                    raise ParseError(f"assignment without right-hand side at offset {toks[i].start}")
                return i + 1
            if tx in ")]}":
                break
            i += 1
        raise ParseError(f"statement missing ';' near offset {toks[start].start}")


def parse_java_method(code: str) -> ParsedJavaMethod:
    """Parse one standalone Java method. Raises ParseError / LexError."""
    tokens = lex_java(code)
    code_tokens = [t for t in tokens if t.kind != KIND_COMMENT]
    if not code_tokens:
        raise ParseError("empty method source")
    pairs = match_brackets(code_tokens)

    i = _skip_annotations_and_modifiers(code_tokens, 0, pairs)
    if i < len(code_tokens) and code_tokens[i].text == "<":
        i = _skip_angles(code_tokens, i)
    j = _skip_type(code_tokens, i)
    if j is None:
        raise ParseError(f"expected return type at offset {code_tokens[i].start}")
    i = j
    if i >= len(code_tokens) or code_tokens[i].kind != KIND_IDENT:
        raise ParseError("expected method name")
    name_index = i
    name = code_tokens[i].text
    i += 1
    if i >= len(code_tokens) or code_tokens[i].text != "(":
        raise ParseError("expected parameter list")
    close_paren = pairs[i]
    param_names, param_indices = _parse_params(code_tokens, i, close_paren)
    i = close_paren + 1
    if i < len(code_tokens) and code_tokens[i].text == "throws":
        i += 1
        while i < len(code_tokens) and code_tokens[i].text != "{":
            i += 1
    if i >= len(code_tokens) or code_tokens[i].text != "{":
        raise ParseError("expected method body")
    body_open = i
    body_close = pairs[i]
    if body_close != len(code_tokens) - 1:
        raise ParseError("trailing tokens after method body")

    walker = _BodyWalker(code_tokens, pairs)
    walker.walk_scope(body_open, parent=-1)
    return ParsedJavaMethod(
        source=code,
        tokens=tokens,
        code_tokens=code_tokens,
        name=name,
        name_index=name_index,
        param_names=param_names,
        param_indices=param_indices,
        body_open=body_open,
        body_close=body_close,
        scopes=walker.scopes,
        statements=walker.statements,
        pairs=pairs,
    )


def local_declarations(parsed: ParsedJavaMethod) -> list[tuple[str, int]]:
    """(name, code-token index) for every local declared in the method:
    plain declarations, for-init, enhanced-for, catch and try-resource
    variables."""
    toks = parsed.code_tokens
    pairs = parsed.pairs
    found: list[tuple[str, int]] = []

    def decl_names_in(lo: int, hi: int) -> None:
        """Scan `Type a = …, b` inside toks[lo:hi] (one declaration)."""
        k = lo
        while k < hi and toks[k].text == "final":
            k += 1
        j = _skip_type(toks, k)
        if j is None or j >= hi or toks[j].kind != KIND_IDENT:
            return
        if j == k:  # no type tokens consumed
            return
        nxt = toks[j + 1].text if j + 1 < hi else ";"
        if nxt not in ("=", ";", ",", ":", ")"):
            return
        found.append((toks[j].text, j))
        # continuation declarators: `, b`, `, c = 2`
        depth = 0
        m = j + 1
        while m < hi:
            tx = toks[m].text
            if tx in "([{":
                depth += 1
            elif tx in ")]}":
                depth -= 1
            elif tx == "," and depth == 0:
                if m + 1 < hi and toks[m + 1].kind == KIND_IDENT:
                    after = toks[m + 2].text if m + 2 < hi else ";"
                    if after in ("=", ",", ";"):
                        found.append((toks[m + 1].text, m + 1))
            m += 1

    for stmt in parsed.statements:
        t0 = toks[stmt.first]
        if stmt.kind == "simple":
            end = stmt.last  # points at ';'
            decl_names_in(stmt.first, end)
        elif stmt.kind == "for":
            op = stmt.first + 1
            close = pairs[op]
            inner = list(range(op + 1, close))
            semis = [k for k in inner if toks[k].text == ";" and _at_depth0(toks, op + 1, k)]
            colon = [k for k in inner if toks[k].text == ":" and _at_depth0(toks, op + 1, k)]
            if semis:
                decl_names_in(op + 1, semis[0])
            elif colon:
                decl_names_in(op + 1, colon[0])
        elif stmt.kind == "try":
            op = stmt.first + 1
            if op <= stmt.last and toks[op].text == "(":
                for lo, hi in _split_semis(toks, op + 1, pairs[op]):
                    decl_names_in(lo, hi)
            # catch parameters
            k = stmt.first
            while k <= stmt.last:
                if toks[k].text == "catch" and toks[k].kind == KIND_KEYWORD:
                    cp = pairs[k + 1]
                    if cp - 1 > k + 1 and toks[cp - 1].kind == KIND_IDENT:
                        found.append((toks[cp - 1].text, cp - 1))
                k += 1
        if stmt.kind in ("if", "while", "do", "block", "synchronized"):
            pass  # nested scopes carry their own statements
        del t0
    return found


def _at_depth0(toks: list[Token], lo: int, k: int) -> bool:
    depth = 0
    for t in toks[lo:k]:
        if t.text in "([{":
            depth += 1
        elif t.text in ")]}":
            depth -= 1
    return depth == 0


def _split_semis(toks: list[Token], lo: int, hi: int) -> list[tuple[int, int]]:
    parts = []
    depth = 0
    start = lo
    for i in range(lo, hi):
        tx = toks[i].text
        if tx in "([{":
            depth += 1
        elif tx in ")]}":
            depth -= 1
        elif tx == ";" and depth == 0:
            parts.append((start, i))
            start = i + 1
    if hi > start:
        parts.append((start, hi))
    return parts


def extract_java_method_spans(file_source: str) -> list[MethodSpan]:
    """Locate method members (not constructors, fields, or initializers)
    inside every class/interface/enum/record body of a Java file."""
    try:
        tokens = [t for t in lex_java(file_source) if t.kind != KIND_COMMENT]
    except LexError as exc:
        raise ParseError(f"lex failure: {exc}") from exc
    if not tokens:
        return []
    pairs = match_brackets(tokens)
    starts = line_start_offsets(file_source)
    spans: list[MethodSpan] = []

    def walk_type(open_idx: int, type_name: str, is_enum: bool) -> None:
        close = pairs[open_idx]
        i = open_idx + 1
        if is_enum:
            # skip the constants section (through the first member-level ';')
            k = i
            while k < close:
                tx = tokens[k].text
                if tx in "([{":
                    k = pairs[k] + 1
                    continue
                if tx == ";":
                    i = k + 1
                    break
                k += 1
            else:
                return
        while i < close:
            member_start = i
            seen_eq = False
            header_paren: int | None = None
            nested_kw: int | None = None
            k = i
            while k < close:
                tx = tokens[k].text
                if tokens[k].kind == KIND_KEYWORD and tx in _TYPE_KEYWORDS:
                    nested_kw = k
                if tx == "=":
                    seen_eq = True
                if tx == "(" and not seen_eq and header_paren is None:
                    header_paren = k
                if tx == "(" or tx == "[":
                    k = pairs[k] + 1
                    continue
                if tx == ";" and not seen_eq:
                    break
                if tx == ";" and seen_eq:
                    break
                if tx == "{":
                    if seen_eq:  # array initializer inside a field
                        k = pairs[k] + 1
                        seen_eq = False
                        continue
                    break
                k += 1
            if k >= close:
                break
            if tokens[k].text == ";":
                i = k + 1
                continue
            body_open = k
            if nested_kw is not None:
                nm = ""
                if nested_kw + 1 < len(tokens) and tokens[nested_kw + 1].kind == KIND_IDENT:
                    nm = tokens[nested_kw + 1].text
                walk_type(body_open, nm, tokens[nested_kw].text == "enum")
                i = pairs[body_open] + 1
                continue
            if header_paren is None:
                i = pairs[body_open] + 1  # initializer block
                continue
            name_tok = tokens[header_paren - 1]
            if name_tok.kind != KIND_IDENT or name_tok.text == type_name:
                i = pairs[body_open] + 1  # constructor or malformed
                continue
            first_tok = tokens[member_start]
            line_start = starts[first_tok.line]
            spans.append(MethodSpan(name=name_tok.text, start=line_start,
                                    end=tokens[pairs[body_open]].end))
            i = pairs[body_open] + 1

    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.kind == KIND_KEYWORD and t.text in _TYPE_KEYWORDS:
            nm = tokens[i + 1].text if i + 1 < len(tokens) and tokens[i + 1].kind == KIND_IDENT else ""
            j = i
            while j < len(tokens) and tokens[j].text != "{":
                j += 1
            if j < len(tokens):
                walk_type(j, nm, t.text == "enum")
                i = pairs[j] + 1
                continue
        i += 1
    return spans
