"""Word-mode lexers for Java and Python plus a never-failing generic lexer.

All spans are character offsets into the LF-normalized source string.
The token list together with the whitespace between tokens reproduces
the source exactly; comments are single tokens so the gaps between
consecutive tokens contain whitespace only.

The generic lexer exists for embedders: perturbed candidates (token
shuffles, symbol replacements) are not valid code in any grammar, but
baseline embedders must still produce a vector for them.
"""

from __future__ import annotations

import bisect
import io
import keyword as _pykeyword
import re
import tokenize as _pytokenize
from dataclasses import dataclass

from .errors import LexError
from .langspec import Language, keyword_set

KIND_IDENT = "ident"
KIND_KEYWORD = "keyword"
KIND_NUMBER = "number"
KIND_STRING = "string"
KIND_COMMENT = "comment"
KIND_OP = "op"


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    kind: str
    line: int  # 0-based line of the token's first character


def normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def line_start_offsets(code: str) -> list[int]:
    starts = [0]
    for i, ch in enumerate(code):
        if ch == "\n":
            starts.append(i + 1)
    return starts


def offset_to_line(starts: list[int], offset: int) -> int:
    return bisect.bisect_right(starts, offset) - 1


_JAVA_OPERATORS = [
    ">>>=",
    ">>>", "<<=", ">>=", "...",
    "->", "::", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
]
_JAVA_SINGLE = set("+-*/%=<>!&|^~?:;,.()[]{}@")

_NUMBER_RE = re.compile(
    r"0[xX][0-9a-fA-F_]+[lL]?"
    r"|0[bB][01_]+[lL]?"
    r"|(?:\d[\d_]*\.[\d_]*|\.\d[\d_]*|\d[\d_]*)(?:[eE][+-]?\d+)?[fFdDlL]?"
)

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")


def _scan_string(code: str, i: int, quote: str, allow_newline: bool) -> int:
    """Return the offset one past the closing quote, or raise LexError."""
    n = len(code)
    j = i + len(quote)
    while j < n:
        ch = code[j]
        if ch == "\\":
            j += 2
            continue
        if not allow_newline and ch == "\n":
            raise LexError("unterminated string literal", i)
        if code.startswith(quote, j):
            return j + len(quote)
        j += 1
    raise LexError("unterminated string literal", i)


def lex_java(code: str) -> list[Token]:
    """Lex Java source. Raises LexError on malformed literals or stray bytes."""
    starts = line_start_offsets(code)
    keywords = keyword_set(Language.JAVA)
    tokens: list[Token] = []
    i, n = 0, len(code)

    def emit(end: int, kind: str) -> None:
        tokens.append(Token(code[i:end], i, end, kind, offset_to_line(starts, i)))

    while i < n:
        ch = code[i]
        if ch in " \t\n\r\f":
            i += 1
            continue
        if code.startswith("//", i):
            end = code.find("\n", i)
            end = n if end == -1 else end
            emit(end, KIND_COMMENT)
            i = end
            continue
        if code.startswith("/*", i):
            end = code.find("*/", i + 2)
            if end == -1:
                raise LexError("unterminated block comment", i)
            emit(end + 2, KIND_COMMENT)
            i = end + 2
            continue
        if code.startswith('"""', i):
            end = _scan_string(code, i, '"""', allow_newline=True)
            emit(end, KIND_STRING)
            i = end
            continue
        if ch == '"':
            end = _scan_string(code, i, '"', allow_newline=False)
            emit(end, KIND_STRING)
            i = end
            continue
        if ch == "'":
            end = _scan_string(code, i, "'", allow_newline=False)
            emit(end, KIND_STRING)
            i = end
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and code[i + 1].isdigit()):
            m = _NUMBER_RE.match(code, i)
            if m is None:
                raise LexError(f"malformed number at offset {i}", i)
            emit(m.end(), KIND_NUMBER)
            i = m.end()
            continue
        m = _IDENT_RE.match(code, i)
        if m is not None:
            kind = KIND_KEYWORD if m.group() in keywords else KIND_IDENT
            emit(m.end(), kind)
            i = m.end()
            continue
        matched = False
        for op in _JAVA_OPERATORS:
            if code.startswith(op, i):
                emit(i + len(op), KIND_OP)
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if ch in _JAVA_SINGLE:
            emit(i + 1, KIND_OP)
            i += 1
            continue
        raise LexError(f"unexpected character {ch!r} at offset {i}", i)
    return tokens


_PY_SKIP_TYPES = {
    _pytokenize.INDENT,
    _pytokenize.DEDENT,
    _pytokenize.NEWLINE,
    _pytokenize.NL,
    _pytokenize.ENDMARKER,
}


def lex_python(code: str) -> list[Token]:
    """Lex Python source with the stdlib tokenizer. Raises LexError."""
    starts = line_start_offsets(code)
    tokens: list[Token] = []
    try:
        for tok in _pytokenize.generate_tokens(io.StringIO(code).readline):
            if tok.type in _PY_SKIP_TYPES or not tok.string:
                continue
            if tok.type == _pytokenize.ERRORTOKEN:
                raise LexError(f"stray token {tok.string!r}", None)
            row, col = tok.start
            start = starts[row - 1] + col
            end = start + len(tok.string)
            if tok.type == _pytokenize.NAME:
                kind = KIND_KEYWORD if _pykeyword.iskeyword(tok.string) else KIND_IDENT
            elif tok.type == _pytokenize.NUMBER:
                kind = KIND_NUMBER
            elif tok.type == _pytokenize.STRING:
                kind = KIND_STRING
            elif tok.type == _pytokenize.COMMENT:
                kind = KIND_COMMENT
            else:
                kind = KIND_OP
            tokens.append(Token(tok.string, start, end, kind, row - 1))
    except (_pytokenize.TokenError, IndentationError, SyntaxError) as exc:
        raise LexError(f"tokenize failed: {exc}", None) from exc
    return tokens


_GENERIC_OPERATORS = [
    ">>>=", "**=", "//=", ">>=", "<<=", ">>>", "...",
    "**", "//", "->", "::", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", ":=",
]


def lex_generic(code: str) -> list[Token]:
    """Language-agnostic lexical split. Never raises; unknown characters
    become single-character tokens and unterminated strings swallow the
    remainder of the text as one token."""
    starts = line_start_offsets(code)
    tokens: list[Token] = []
    i, n = 0, len(code)

    def emit(end: int, kind: str) -> None:
        tokens.append(Token(code[i:end], i, end, kind, offset_to_line(starts, i)))

    while i < n:
        ch = code[i]
        if ch.isspace():
            i += 1
            continue
        if code.startswith("//", i) or ch == "#":
            end = code.find("\n", i)
            end = n if end == -1 else end
            emit(end, KIND_COMMENT)
            i = end
            continue
        if code.startswith("/*", i):
            end = code.find("*/", i + 2)
            end = n if end == -1 else end + 2
            emit(end, KIND_COMMENT)
            i = end
            continue
        if ch in "\"'":
            for quote in (ch * 3, ch):
                if code.startswith(quote, i):
                    try:
                        end = _scan_string(code, i, quote, allow_newline=len(quote) == 3)
                    except LexError:
                        end = n
                    emit(end, KIND_STRING)
                    i = end
                    break
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and code[i + 1].isdigit()):
            m = _NUMBER_RE.match(code, i)
            end = m.end() if m else i + 1
            emit(end, KIND_NUMBER)
            i = end
            continue
        m = _IDENT_RE.match(code, i)
        if m is not None:
            emit(m.end(), KIND_IDENT)
            i = m.end()
            continue
        matched = False
        for op in _GENERIC_OPERATORS:
            if code.startswith(op, i):
                emit(i + len(op), KIND_OP)
                i += len(op)
                matched = True
                break
        if not matched:
            emit(i + 1, KIND_OP)
            i += 1
    return tokens


def lex(code: str, language: Language) -> list[Token]:
    if language is Language.JAVA:
        return lex_java(code)
    return lex_python(code)


def gaps_are_whitespace(code: str, tokens: list[Token]) -> bool:
    """True when tokens plus inter-token whitespace reproduce `code`."""
    pos = 0
    for tok in tokens:
        if code[pos:tok.start].strip():
            return False
        if code[tok.start:tok.end] != tok.text:
            return False
        pos = tok.end
    return not code[pos:].strip()
