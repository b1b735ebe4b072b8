"""Corpus ingestion: extract function-level units from source trees,
canonicalize, filter, deduplicate, and persist a manifest.

Canonical unit text: LF newlines, common indentation stripped,
whitespace-only lines emptied, per-line trailing whitespace removed
(except inside multi-line string/comment tokens), no trailing blank
lines. Unit files on disk carry one trailing newline; re-ingesting a
corpus directory therefore reproduces the same manifest.

Rejection reasons are checked in the fixed order parse, length,
tokens, dedup; a unit is recorded under the first reason it violates.
"""

from __future__ import annotations

import struct
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from . import javastruct, pystruct
from .errors import EmptyCorpus, InconsistentRecord, LexError, ParseError, PipelineIOError
from .langspec import Language, extension_for
from .lexing import lex, lex_generic, normalize_newlines
from . import jsonio


@dataclass(frozen=True)
class CodeUnit:
    id: str
    language: str
    source: str
    problem_id: str
    solution_id: str
    token_count: int
    line_count: int


@dataclass(frozen=True)
class IngestFilter:
    min_lines: int = 3
    max_lines: int = 150
    max_tokens: int = 1024
    require_parse: bool = True
    dedup: bool = True

    def __post_init__(self):
        if self.min_lines < 1:
            raise ValueError("min_lines must be >= 1")
        if self.max_lines < self.min_lines:
            raise ValueError("max_lines must be >= min_lines")


@dataclass
class IngestResult:
    units: list[CodeUnit]
    rejected: dict[str, int]
    diagnostics: list[str] = field(default_factory=list)


REJECT_ORDER = ("parse", "length", "tokens", "dedup")


def _common_ws_prefix(lines: list[str]) -> str:
    prefix: str | None = None
    for ln in lines:
        if not ln.strip():
            continue
        lead = ln[: len(ln) - len(ln.lstrip())]
        if prefix is None:
            prefix = lead
        else:
            stop = min(len(prefix), len(lead))
            k = 0
            while k < stop and prefix[k] == lead[k]:
                k += 1
            prefix = prefix[:k]
        if not prefix:
            return ""
    return prefix or ""


def dedent_block(text: str) -> str:
    lines = text.split("\n")
    prefix = _common_ws_prefix(lines)
    out = []
    for ln in lines:
        if not ln.strip():
            out.append("")
        elif prefix and ln.startswith(prefix):
            out.append(ln[len(prefix):])
        else:
            out.append(ln)
    return "\n".join(out)


def _strip_trailing_ws(text: str, language: Language) -> str:
    """Remove per-line trailing whitespace outside multi-line tokens."""
    try:
        tokens = lex(text, language)
    except LexError:
        tokens = lex_generic(text)
    protected = [(t.start, t.end) for t in tokens if "\n" in t.text]
    out = []
    pos = 0
    for ln in text.split("\n"):
        end = pos + len(ln)
        stripped = ln.rstrip()
        cut_from = pos + len(stripped)
        if any(a < end and cut_from < b for a, b in protected):
            out.append(ln)
        else:
            out.append(stripped)
        pos = end + 1
    return "\n".join(out)


def canonicalize(text: str, language: Language) -> str:
    text = normalize_newlines(text)
    text = dedent_block(text)
    text = _strip_trailing_ws(text, language)
    return text.strip("\n")


def normalization_hash(source: str, language: Language) -> str:
    """Token-stream digest: trailing-whitespace/newline invariant,
    sensitive to content and to line structure (tokens are framed with
    their line delta and column, so Python indentation still counts)."""
    try:
        tokens = lex(source, language)
    except LexError:
        tokens = lex_generic(source)
    h = hashlib.sha256()
    h.update(language.value.encode())
    prev_line = 0
    starts = _line_starts_cache(source)
    for t in tokens:
        col = t.start - starts[t.line]
        payload = t.text.encode("utf-8")
        h.update(struct.pack(">iiI", t.line - prev_line, col, len(payload)))
        h.update(payload)
        prev_line = t.line
    return h.hexdigest()


def _line_starts_cache(source: str) -> list[int]:
    from .lexing import line_start_offsets
    return line_start_offsets(source)


def unit_id_for(source: str, language: Language, taken: set[str]) -> str:
    base = f"{language.value}-{jsonio.sha256_text(source)[:12]}"
    uid = base
    n = 1
    while uid in taken:
        n += 1
        uid = f"{base}-{n}"
    return uid


def validate_standalone(source: str, language: Language) -> None:
    """Raise ParseError/LexError unless source is one well-formed unit."""
    if language is Language.JAVA:
        javastruct.parse_java_method(source)
    else:
        pystruct.validate_python_unit(source)


def extract_functions(file_source: str, language: Language) -> tuple[list[str], list[str]]:
    """Extract function-level snippets (dedented) from one file.
    Returns (snippets, diagnostics); parse failure gives ([], [reason])."""
    text = normalize_newlines(file_source)
    snippets: list[str] = []
    diagnostics: list[str] = []
    if language is Language.JAVA:
        try:
            javastruct.parse_java_method(canonicalize(text, language))
            return [text], diagnostics
        except (ParseError, LexError):
            pass
        try:
            spans = javastruct.extract_java_method_spans(text)
        except ParseError as exc:
            return [], [f"parse: {exc}"]
        for sp in spans:
            snippets.append(text[sp.start:sp.end])
    else:
        try:
            spans = pystruct.extract_python_function_spans(text)
        except ParseError as exc:
            return [], [f"parse: {exc}"]
        for sp in spans:
            snippets.append(text[sp.start:sp.end])
    if not snippets:
        diagnostics.append("parse: no function-level members found")
    return snippets, diagnostics


def _count_tokens(source: str, language: Language) -> int:
    try:
        return len(lex(source, language))
    except LexError:
        return len(lex_generic(source))


def ingest_paths(in_dir: Path, language: Language, filt: IngestFilter) -> IngestResult:
    """Walk a source tree and build the surviving unit list."""
    ext = extension_for(language)
    try:
        files = sorted(p for p in in_dir.rglob(f"*{ext}") if p.is_file())
    except OSError as exc:
        raise PipelineIOError(f"cannot walk {in_dir}: {exc}") from exc
    if not in_dir.is_dir():
        raise PipelineIOError(f"input directory not found: {in_dir}")

    units: list[CodeUnit] = []
    rejected = {r: 0 for r in REJECT_ORDER}
    diagnostics: list[str] = []
    seen_norm: set[str] = set()
    taken_ids: set[str] = set()

    for path in files:
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise PipelineIOError(f"cannot read {path}: {exc}") from exc
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            rejected["parse"] += 1
            diagnostics.append(f"{path}: not valid UTF-8")
            continue

        rel = path.relative_to(in_dir)
        problem_id = rel.parent.name or "root"
        solution_id = path.stem

        snippets, diags = extract_functions(text, language)
        diagnostics.extend(f"{path}: {d}" for d in diags)
        if not snippets:
            if filt.require_parse:
                rejected["parse"] += 1
                continue
            snippets = [text]

        for snippet in snippets:
            source = canonicalize(snippet, language)
            ok_parse = True
            try:
                validate_standalone(source, language)
            except (ParseError, LexError) as exc:
                ok_parse = False
                diagnostics.append(f"{path}: unit rejected: {exc}")
            if filt.require_parse and not ok_parse:
                rejected["parse"] += 1
                continue
            line_count = source.count("\n") + 1 if source else 0
            if line_count < filt.min_lines or line_count > filt.max_lines:
                rejected["length"] += 1
                continue
            token_count = _count_tokens(source, language)
            if token_count > filt.max_tokens:
                rejected["tokens"] += 1
                continue
            if filt.dedup:
                nh = normalization_hash(source, language)
                if nh in seen_norm:
                    rejected["dedup"] += 1
                    continue
                seen_norm.add(nh)
            uid = unit_id_for(source, language, taken_ids)
            taken_ids.add(uid)
            units.append(CodeUnit(
                id=uid, language=language.value, source=source,
                problem_id=problem_id, solution_id=solution_id,
                token_count=token_count, line_count=line_count))
    return IngestResult(units=units, rejected=rejected, diagnostics=diagnostics)


def write_corpus(result: IngestResult, out_dir: Path, language: Language,
                 filt: IngestFilter, source_description: str) -> Path:
    if not result.units:
        raise EmptyCorpus("no units survived ingestion")
    units_dir = out_dir / "units"
    units_dir.mkdir(parents=True, exist_ok=True)
    ext = extension_for(language)
    rows = []
    for unit in sorted(result.units, key=lambda u: u.id):
        rel = f"units/{unit.id}{ext}"
        jsonio.write_text(out_dir / rel, unit.source + "\n")
        rows.append({
            "type": "unit",
            "id": unit.id,
            "language": unit.language,
            "path": rel,
            "hash": jsonio.sha256_text(unit.source + "\n"),
            "norm_hash": normalization_hash(unit.source, Language.parse(unit.language)),
            "problem_id": unit.problem_id,
            "solution_id": unit.solution_id,
            "line_count": unit.line_count,
            "token_count": unit.token_count,
        })
    header = {
        "type": "header",
        "language": language.value,
        "filter_config": {
            "min_lines": filt.min_lines,
            "max_lines": filt.max_lines,
            "max_tokens": filt.max_tokens,
            "require_parse": filt.require_parse,
            "dedup": filt.dedup,
        },
        "created_at": jsonio.created_at(),
        "source_description": source_description,
        "unit_count": len(rows),
        "rejected": {r: result.rejected[r] for r in REJECT_ORDER},
    }
    manifest = out_dir / "manifest.jsonl"
    jsonio.write_jsonl(manifest, [header, *rows])
    return manifest


def ingest_corpus(in_dir: Path, language: Language, filt: IngestFilter,
                  out_dir: Path) -> dict:
    result = ingest_paths(in_dir, language, filt)
    write_corpus(result, out_dir, language, filt, source_description=str(in_dir))
    return {
        "units": len(result.units),
        "rejected": {r: result.rejected[r] for r in REJECT_ORDER},
    }


def load_corpus(corpus_dir: Path, verify: bool = True) -> tuple[dict, list[CodeUnit]]:
    """Read a corpus directory back. Verifies content hashes."""
    manifest = corpus_dir / "manifest.jsonl"
    header: dict | None = None
    units: list[CodeUnit] = []
    for rec in jsonio.read_jsonl(manifest):
        if rec.get("type") == "header":
            header = rec
            continue
        path = corpus_dir / rec["path"]
        text = jsonio.read_text(path)
        if verify and jsonio.sha256_text(text) != rec["hash"]:
            raise InconsistentRecord(f"hash mismatch for {rec['id']} at {path}")
        units.append(CodeUnit(
            id=rec["id"], language=rec["language"], source=text.rstrip("\n"),
            problem_id=rec.get("problem_id", ""), solution_id=rec.get("solution_id", ""),
            token_count=rec["token_count"], line_count=rec["line_count"]))
    if header is None:
        raise InconsistentRecord(f"{manifest}: missing header record")
    return header, units
