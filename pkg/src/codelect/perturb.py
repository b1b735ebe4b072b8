"""The five seeded perturbations: identifier obfuscation (invertible),
line-block shuffle (dependency-checked), token shuffle, keyword
replacement, and structural-symbol replacement.

Every operation is a pure function of (unit, summary, seed, params).
Randomness comes from `random.Random(seed)` only; the stdlib generator
is reproducible across platforms for a fixed seed.

Line shuffling draws (scope, span, permutation) up to a retry budget
and accepts only when the permutation inverts at least one
order-dependent pair of blocks, so every accepted shuffle is either
genuinely behavior-changing or flagged by the conservative side-effect
rule - the record names the inverted pairs and the reason each fired.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .analysis import LineBlock, SyntaxSummary, scope_line_blocks
from .errors import (
    NothingToObfuscate,
    NothingToReplace,
    NothingToShuffle,
    NoValidShuffle,
    WrongKind,
)
from .langspec import STRUCTURAL_SYMBOLS, SYMBOL_REPLACEMENT_EXTRA, Language, reserved_keywords
from .lexing import KIND_IDENT, KIND_KEYWORD, lex

KINDS = ("obfuscate", "line_shuffle", "token_shuffle", "keyword_replace", "symbol_replace")
LINE_SHUFFLE_BUDGET = 32
DEFAULT_MAX_SPAN = 5


@dataclass(frozen=True)
class PerturbationRecord:
    kind: str
    seed: int
    fraction: float | None = None
    rename_map: tuple[tuple[str, str], ...] | None = None
    scope_id: int | None = None
    span: tuple[int, int] | None = None        # block ordinals within scope
    line_span: tuple[int, int] | None = None   # 0-based source lines
    permutation: tuple[int, ...] | None = None
    inverted_pairs: tuple[dict, ...] | None = None
    signature_preserved: bool | None = None
    body_token_start: int | None = None
    count: int | None = None
    max_span: int | None = None
    replaced_positions: tuple[tuple[tuple[int, int], str, str], ...] | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "seed": self.seed}
        if self.kind == "obfuscate":
            out["fraction"] = self.fraction
            out["rename_map"] = {old: new for old, new in self.rename_map}
        elif self.kind == "line_shuffle":
            out["max_span"] = self.max_span
            out["scope_id"] = self.scope_id
            out["span"] = list(self.span)
            out["line_span"] = list(self.line_span)
            out["permutation"] = list(self.permutation)
            out["inverted_pairs"] = list(self.inverted_pairs)
        elif self.kind == "token_shuffle":
            out["signature_preserved"] = self.signature_preserved
            out["body_token_start"] = self.body_token_start
            out["permutation"] = list(self.permutation)
        else:
            out["count"] = self.count
            out["replaced_positions"] = [
                [list(span), old, new] for span, old, new in self.replaced_positions]
        return out

    @classmethod
    def from_json(cls, rec: dict) -> "PerturbationRecord":
        kind = rec["kind"]
        kw: dict = {"kind": kind, "seed": rec["seed"]}
        if kind == "obfuscate":
            kw["fraction"] = rec["fraction"]
            kw["rename_map"] = tuple(rec["rename_map"].items())
        elif kind == "line_shuffle":
            kw["max_span"] = rec.get("max_span")
            kw["scope_id"] = rec["scope_id"]
            kw["span"] = tuple(rec["span"])
            kw["line_span"] = tuple(rec["line_span"])
            kw["permutation"] = tuple(rec["permutation"])
            kw["inverted_pairs"] = tuple(rec["inverted_pairs"])
        elif kind == "token_shuffle":
            kw["signature_preserved"] = rec["signature_preserved"]
            kw["body_token_start"] = rec["body_token_start"]
            kw["permutation"] = tuple(rec["permutation"])
        else:
            kw["count"] = rec["count"]
            kw["replaced_positions"] = tuple(
                (tuple(span), old, new) for span, old, new in rec["replaced_positions"])
        return cls(**kw)


@dataclass(frozen=True)
class PerturbedUnit:
    base_unit_id: str
    source: str
    record: PerturbationRecord
    logically_equivalent: bool


def _splice(source: str, edits: list[tuple[int, int, str]]) -> str:
    """Apply (start, end, replacement) edits; spans must not overlap."""
    out = source
    for start, end, new in sorted(edits, key=lambda e: e[0], reverse=True):
        out = out[:start] + new + out[end:]
    return out


# ------------------------------------------------------------ obfuscate

def obfuscate(unit, summary: SyntaxSummary, seed: int, fraction: float) -> PerturbedUnit:
    """Rename a seeded selection of bindings to V0…/F0… (selection order)."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0,1]")
    bindings = summary.bindings
    if fraction > 0 and not bindings:
        raise NothingToObfuscate(f"unit {unit.id} declares no identifiers")
    k = math.ceil(fraction * len(bindings))
    rng = random.Random(seed)
    chosen = rng.sample(range(len(bindings)), k) if k else []

    language = Language.parse(unit.language)
    keywords = reserved_keywords(language)
    token_texts = {t.text for t in summary.tokens}
    used_values: set[str] = set()

    # same-named bindings (shadowing scopes) rename as one unit, so the
    # rename map stays a plain old->new association and deobfuscation
    # can work from token text alone
    counters = {"V": 0, "F": 0}
    rename: list[tuple[str, str]] = []
    for idx in chosen:
        b = bindings[idx]
        if any(old == b.name for old, _ in rename):
            continue
        prefix = "F" if b.kind == "function" else "V"
        while True:
            candidate = f"{prefix}{counters[prefix]}"
            counters[prefix] += 1
            if (candidate not in token_texts and candidate not in keywords
                    and candidate not in used_values):
                break
        used_values.add(candidate)
        rename.append((b.name, candidate))

    mapping = dict(rename)
    edits = []
    for b in bindings:
        new = mapping.get(b.name)
        if new is None:
            continue
        for start, end in b.all_spans():
            edits.append((start, end, new))
    new_source = _splice(unit.source, edits)
    record = PerturbationRecord(kind="obfuscate", seed=seed, fraction=fraction,
                                rename_map=tuple(rename))
    return PerturbedUnit(base_unit_id=unit.id, source=new_source, record=record,
                         logically_equivalent=True)


def deobfuscate(p: PerturbedUnit, language: Language) -> str:
    """Invert the rename map. Fresh names occur only at renamed spans,
    so replacing every identifier token that carries one restores the
    base source byte-exactly."""
    if p.record.kind != "obfuscate":
        raise WrongKind(f"cannot deobfuscate a {p.record.kind} perturbation")
    inverse = {new: old for old, new in p.record.rename_map}
    if not inverse:
        return p.source
    edits = []
    for t in lex(p.source, language):
        if t.kind == KIND_IDENT and t.text in inverse:
            edits.append((t.start, t.end, inverse[t.text]))
    return _splice(p.source, edits)


# --------------------------------------------------------- line shuffle

_REASONS = ("write_conflict", "read_then_write", "side_effects")


def _dependence_reason(a: LineBlock, b: LineBlock) -> str | None:
    if a.defs & (b.defs | b.uses):
        return "write_conflict"
    if a.uses & b.defs:
        return "read_then_write"
    if a.has_side_effect and b.has_side_effect:
        return "side_effects"
    return None


def _clean_runs(blocks: list[LineBlock]) -> list[tuple[int, int]]:
    """Maximal runs of consecutive clean blocks with length >= 2."""
    runs = []
    start = None
    for i, b in enumerate(blocks):
        if b.clean:
            if start is None:
                start = i
        else:
            if start is not None and i - start >= 2:
                runs.append((start, i - 1))
            start = None
    if start is not None and len(blocks) - start >= 2:
        runs.append((start, len(blocks) - 1))
    return runs


def _non_identity_permutation(rng: random.Random, n: int) -> tuple[int, ...]:
    perm = list(range(n))
    while True:
        rng.shuffle(perm)
        if any(perm[i] != i for i in range(n)):
            return tuple(perm)


def line_shuffle(unit, summary: SyntaxSummary, seed: int,
                 max_span: int = DEFAULT_MAX_SPAN) -> PerturbedUnit:
    """Permute a contiguous run of line blocks such that at least one
    inverted pair is order dependent. Raises NoValidShuffle when the
    retry budget is exhausted (the unit is then excluded upstream)."""
    if max_span < 2:
        raise ValueError("max_span must be >= 2")
    candidates = []  # (scope_id, blocks, runs)
    for scope_id in sorted(summary.scope_statements):
        blocks = scope_line_blocks(summary, scope_id)
        runs = _clean_runs(blocks)
        if runs:
            candidates.append((scope_id, blocks, runs))
    if not candidates:
        raise NoValidShuffle(f"unit {unit.id}: no scope with 2+ shufflable blocks")

    rng = random.Random(seed)
    for _ in range(LINE_SHUFFLE_BUDGET):
        scope_id, blocks, runs = candidates[rng.randrange(len(candidates))]
        run_lo, run_hi = runs[rng.randrange(len(runs))]
        run_len = run_hi - run_lo + 1
        span_len = rng.randint(2, min(max_span, run_len))
        j = rng.randint(run_lo, run_hi - span_len + 1)
        k = j + span_len - 1
        perm = _non_identity_permutation(rng, span_len)

        window = blocks[j:k + 1]
        inverted = []
        for bi in range(span_len):
            for bj in range(bi + 1, span_len):
                if perm.index(bi) > perm.index(bj):
                    reason = _dependence_reason(window[bi], window[bj])
                    if reason is not None:
                        inverted.append({"a": j + bi, "b": j + bj, "reason": reason})
        if not inverted:
            continue

        new_source = _apply_block_permutation(unit.source, blocks, j, k, perm)
        record = PerturbationRecord(
            kind="line_shuffle", seed=seed, max_span=max_span, scope_id=scope_id,
            span=(j, k), line_span=(blocks[j].start_line, blocks[k].end_line),
            permutation=perm, inverted_pairs=tuple(inverted))
        return PerturbedUnit(base_unit_id=unit.id, source=new_source, record=record,
                             logically_equivalent=False)
    raise NoValidShuffle(f"unit {unit.id}: no accepting draw in {LINE_SHUFFLE_BUDGET} tries")


def _block_chunks(lines: list[str], blocks: list[LineBlock], j: int, k: int) -> list[list[str]]:
    """Chunk the line region of blocks j..k; interior chunks absorb the
    comment/blank lines that trail them."""
    chunks = []
    for idx in range(j, k + 1):
        s = blocks[idx].start_line
        e = blocks[idx + 1].start_line - 1 if idx < k else blocks[k].end_line
        chunks.append(lines[s:e + 1])
    return chunks


def _apply_block_permutation(source: str, blocks: list[LineBlock], j: int, k: int,
                             perm: tuple[int, ...]) -> str:
    lines = source.split("\n")
    chunks = _block_chunks(lines, blocks, j, k)
    region = []
    for pi in perm:
        region.extend(chunks[pi])
    out = lines[:blocks[j].start_line] + region + lines[blocks[k].end_line + 1:]
    return "\n".join(out)


def shuffled_block_multiset(source: str, blocks: list[LineBlock], j: int, k: int) -> list[str]:
    """Chunk texts as multiset elements, for the preservation invariant."""
    lines = source.split("\n")
    return sorted("\n".join(c) for c in _block_chunks(lines, blocks, j, k))


# --------------------------------------------------------- token shuffle

def _body_token_start(summary: SyntaxSummary) -> int:
    """Index (into summary.tokens) of the first body token: past the
    opening '{' for Java, past the def-header ':' for Python."""
    toks = summary.tokens
    if summary.language is Language.JAVA:
        for i, t in enumerate(toks):
            if t.text == "{":
                return i + 1
        raise NothingToShuffle("no body brace found")
    depth = 0
    seen_def = False
    for i, t in enumerate(toks):
        if t.kind == KIND_KEYWORD and t.text == "def":
            seen_def = True
        elif t.text in "([{":
            depth += 1
        elif t.text in ")]}":
            depth -= 1
        elif seen_def and t.text == ":" and depth == 0:
            return i + 1
    raise NothingToShuffle("no def header found")


def token_shuffle(unit, summary: SyntaxSummary, seed: int) -> PerturbedUnit:
    """Permute every body token (closing brace included), keeping the
    signature; output is the signature plus space-joined tokens."""
    toks = summary.tokens
    start = _body_token_start(summary)
    body = toks[start:]
    if len(body) < 2:
        raise NothingToShuffle(f"unit {unit.id}: body has {len(body)} token(s)")
    rng = random.Random(seed)
    perm = _non_identity_permutation(rng, len(body))
    shuffled = [body[i].text for i in perm]
    head = unit.source[:toks[start - 1].end]
    new_source = head + "\n" + " ".join(shuffled)
    record = PerturbationRecord(kind="token_shuffle", seed=seed,
                                signature_preserved=True, body_token_start=start,
                                permutation=perm)
    return PerturbedUnit(base_unit_id=unit.id, source=new_source, record=record,
                         logically_equivalent=False)


# ------------------------------------------------- replacement perturbations

def _replace_spans(unit, summary: SyntaxSummary, seed: int, count: int,
                   spans: list[tuple[int, int]], choices_for, kind: str) -> PerturbedUnit:
    if count < 0:
        raise ValueError("count must be >= 0")
    if not spans:
        raise NothingToReplace(f"unit {unit.id}: nothing to replace for {kind}")
    rng = random.Random(seed)
    k = min(count, len(spans))
    picked = sorted(rng.sample(range(len(spans)), k))
    replaced = []
    edits = []
    for idx in picked:
        start, end = spans[idx]
        old = unit.source[start:end]
        options = choices_for(old)
        new = options[rng.randrange(len(options))]
        replaced.append(((start, end), old, new))
        edits.append((start, end, new))
    new_source = _splice(unit.source, edits)
    record = PerturbationRecord(kind=kind, seed=seed, count=count,
                                replaced_positions=tuple(replaced))
    return PerturbedUnit(base_unit_id=unit.id, source=new_source, record=record,
                         logically_equivalent=False)


def keyword_replace(unit, summary: SyntaxSummary, seed: int, count: int) -> PerturbedUnit:
    language = Language.parse(unit.language)
    keywords = reserved_keywords(language)

    def choices(old: str) -> list[str]:
        return [kw for kw in keywords if kw != old]

    return _replace_spans(unit, summary, seed, count, summary.keyword_spans,
                          choices, "keyword_replace")


def symbol_replace(unit, summary: SyntaxSummary, seed: int, count: int) -> PerturbedUnit:
    def choices(old: str) -> list[str]:
        out = [s for s in STRUCTURAL_SYMBOLS if s != old]
        out.append(SYMBOL_REPLACEMENT_EXTRA)
        return out

    return _replace_spans(unit, summary, seed, count, summary.symbol_spans,
                          choices, "symbol_replace")


def apply_kind(kind: str, unit, summary: SyntaxSummary, seed: int, *,
               fraction: float = 1.0, count: int = 3,
               max_span: int = DEFAULT_MAX_SPAN) -> PerturbedUnit:
    """Dispatch by kind name with that kind's parameters."""
    if kind == "obfuscate":
        return obfuscate(unit, summary, seed, fraction)
    if kind == "line_shuffle":
        return line_shuffle(unit, summary, seed, max_span)
    if kind == "token_shuffle":
        return token_shuffle(unit, summary, seed)
    if kind == "keyword_replace":
        return keyword_replace(unit, summary, seed, count)
    if kind == "symbol_replace":
        return symbol_replace(unit, summary, seed, count)
    raise WrongKind(f"unknown perturbation kind: {kind}")
