"""Training-sequence emission for the three code variants, and loss
assembly from externally computed log-probabilities.

Target convention: position i predicts token i+1, so an n-token input
yields n-1 targets. Line-shuffled examples redirect every position
whose next token falls inside the shuffled token interval to the
reserved void token `<v>`; obfuscated examples keep the obfuscated
tokens as input but take the original token stream as targets.

Loss reduction is the mean negative log-likelihood per position within
each variant, summed across the three variants.
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass

from .errors import (
    AlignmentSkipped,
    DomainError,
    InconsistentRecord,
    LexError,
    PipelineIOError,
    ShapeError,
    TokenizeError,
    TooShort,
    WrongKind,
)
from .langspec import Language
from .lexing import lex, offset_to_line, line_start_offsets

VOID_TOKEN = "<v>"
VOID_ESCAPE = "\\<v>"

VARIANTS = ("original", "line_shuffled", "obfuscated")

KIND_NORMAL = "normal"
KIND_VOID = "void"
KIND_OBF = "obf_target"


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    line_index: tuple[int, ...]  # physical 0-based line per token
    mode: str  # word | external

    def __post_init__(self):
        if not self.tokens:
            raise TooShort("empty token sequence")
        if len(self.tokens) != len(self.line_index):
            raise ShapeError("tokens and line_index lengths differ")
        if any(b < a for a, b in zip(self.line_index, self.line_index[1:])):
            raise ShapeError("line_index must be non-decreasing")


@dataclass(frozen=True)
class TrainingExample:
    variant: str
    input: TokenSequence
    targets: tuple[str, ...]
    target_kind: tuple[str, ...]
    span: tuple[int, int] | None  # token interval, line_shuffled only
    base_unit_id: str

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "input_tokens": list(self.input.tokens),
            "targets": list(self.targets),
            "target_kind": list(self.target_kind),
            "span": list(self.span) if self.span else None,
            "base_unit_id": self.base_unit_id,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "TrainingExample":
        tokens = tuple(rec["input_tokens"])
        seq = TokenSequence(tokens=tokens, line_index=(0,) * len(tokens), mode="word")
        return cls(variant=rec["variant"], input=seq,
                   targets=tuple(rec["targets"]), target_kind=tuple(rec["target_kind"]),
                   span=tuple(rec["span"]) if rec.get("span") else None,
                   base_unit_id=rec["base_unit_id"])


def _escape_void(text: str) -> str:
    return VOID_ESCAPE if text == VOID_TOKEN else text


def tokenize(code: str, mode: str = "word", language: Language | None = None) -> TokenSequence:
    """Word-mode lexical tokenization. External mode goes through
    ExternalTokenizer; this entry handles word mode only."""
    if mode != "word":
        raise ValueError("use ExternalTokenizer for external mode")
    if not code:
        raise TooShort("empty source")
    if language is None:
        raise ValueError("language required for word mode")
    try:
        toks = lex(code, language)
    except LexError as exc:
        raise TokenizeError(f"lexing failed: {exc}") from exc
    if not toks:
        raise TooShort("source lexes to zero tokens")
    return TokenSequence(tokens=tuple(_escape_void(t.text) for t in toks),
                         line_index=tuple(t.line for t in toks), mode="word")


def shifted_targets(tokens: tuple[str, ...]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    targets = tuple(tokens[1:])
    kinds = (KIND_NORMAL,) * len(targets)
    return targets, kinds


def void_targets(tokens: tuple[str, ...],
                 interval: tuple[int, int] | None) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Shift targets, voiding position i whenever i+1 lies in interval.
    An empty interval reduces to the plain shift."""
    targets = []
    kinds = []
    a, b = interval if interval else (1, 0)
    for i in range(len(tokens) - 1):
        if a <= i + 1 <= b:
            targets.append(VOID_TOKEN)
            kinds.append(KIND_VOID)
        else:
            targets.append(tokens[i + 1])
            kinds.append(KIND_NORMAL)
    return tuple(targets), tuple(kinds)


def emit_original_example(unit) -> TrainingExample:
    seq = tokenize(unit.source, "word", Language.parse(unit.language))
    if len(seq.tokens) < 2:
        raise TooShort(f"unit {unit.id}: {len(seq.tokens)} token(s)")
    targets, kinds = shifted_targets(seq.tokens)
    return TrainingExample(variant="original", input=seq, targets=targets,
                           target_kind=kinds, span=None, base_unit_id=unit.id)


def emit_shuffled_example(p, language: Language) -> TrainingExample:
    """p: PerturbedUnit with kind=line_shuffle. The record's line span is
    converted to the covering token interval of the shuffled source."""
    if p.record.kind != "line_shuffle":
        raise WrongKind(f"expected line_shuffle, got {p.record.kind}")
    seq = tokenize(p.source, "word", language)
    if len(seq.tokens) < 2:
        raise TooShort(f"unit {p.base_unit_id}: too few tokens")
    s, e = p.record.line_span
    covered = [i for i, ln in enumerate(seq.line_index) if s <= ln <= e]
    if not covered:
        raise InconsistentRecord(
            f"unit {p.base_unit_id}: no tokens on shuffled lines {s}..{e}")
    interval = (covered[0], covered[-1])
    targets, kinds = void_targets(seq.tokens, interval)
    return TrainingExample(variant="line_shuffled", input=seq, targets=targets,
                           target_kind=kinds, span=interval, base_unit_id=p.base_unit_id)


def emit_obfuscated_example(p, base, mode: str = "word",
                            tokenizer: "ExternalTokenizer | None" = None) -> TrainingExample:
    """Input = obfuscated tokens, targets = original tokens shifted."""
    if p.record.kind != "obfuscate":
        raise WrongKind(f"expected obfuscate, got {p.record.kind}")
    if p.base_unit_id != base.id:
        raise InconsistentRecord(f"perturbation of {p.base_unit_id} paired with {base.id}")
    language = Language.parse(base.language)
    if mode == "word":
        obf_seq = tokenize(p.source, "word", language)
        base_seq = tokenize(base.source, "word", language)
        if len(obf_seq.tokens) != len(base_seq.tokens):
            raise InconsistentRecord(
                f"unit {base.id}: word-mode token counts diverge "
                f"({len(obf_seq.tokens)} vs {len(base_seq.tokens)})")
    else:
        if tokenizer is None:
            raise ValueError("external mode needs a tokenizer")
        obf_seq = tokenizer.tokenize(p.source)
        base_seq = tokenizer.tokenize(base.source)
        if len(obf_seq.tokens) != len(base_seq.tokens):
            raise AlignmentSkipped(
                f"unit {base.id}: external token counts diverge "
                f"({len(obf_seq.tokens)} vs {len(base_seq.tokens)})")
    if len(obf_seq.tokens) < 2:
        raise TooShort(f"unit {base.id}: too few tokens")
    targets = tuple(base_seq.tokens[1:])
    kinds = (KIND_OBF,) * len(targets)
    return TrainingExample(variant="obfuscated", input=obf_seq, targets=targets,
                           target_kind=kinds, span=None, base_unit_id=base.id)


@dataclass(frozen=True)
class LossBreakdown:
    l_ori: float
    l_lsf: float
    l_obf: float
    l_total: float
    contributing_positions: dict[str, int]

    def to_json(self) -> dict:
        return {
            "l_ori": self.l_ori,
            "l_lsf": self.l_lsf,
            "l_obf": self.l_obf,
            "l_total": self.l_total,
            "contributing_positions": {v: self.contributing_positions.get(v, 0)
                                       for v in VARIANTS},
        }


_VARIANT_FIELD = {"original": "l_ori", "line_shuffled": "l_lsf", "obfuscated": "l_obf"}


def assemble_loss(examples: list[TrainingExample],
                  logprobs: list[list[float]]) -> LossBreakdown:
    """Mean NLL per variant over all target positions; total is the sum
    of the three variant means."""
    if len(examples) != len(logprobs):
        raise ShapeError(f"{len(examples)} examples vs {len(logprobs)} logprob rows")
    sums = {v: [] for v in VARIANTS}
    for ex, lps in zip(examples, logprobs):
        if ex.variant not in sums:
            raise ShapeError(f"unknown variant {ex.variant!r}")
        if len(lps) != len(ex.targets):
            raise ShapeError(
                f"unit {ex.base_unit_id}: {len(lps)} logprobs for {len(ex.targets)} targets")
        for lp in lps:
            if not math.isfinite(lp) or lp > 0.0:
                raise DomainError(f"log-probability {lp!r} outside (-inf, 0]")
        sums[ex.variant].extend(lps)
    losses = {}
    counts = {}
    for variant in VARIANTS:
        vals = sums[variant]
        counts[variant] = len(vals)
        losses[variant] = -(math.fsum(vals) / len(vals)) if vals else 0.0
    total = math.fsum(losses[v] for v in VARIANTS)
    return LossBreakdown(l_ori=losses["original"], l_lsf=losses["line_shuffled"],
                         l_obf=losses["obfuscated"], l_total=total,
                         contributing_positions=counts)


class ExternalTokenizer:
    """Subprocess tokenizer speaking line-delimited JSON:
    request {"id","text"} -> response {"id","tokens":[...],"offsets":[...]}."""

    def __init__(self, command: list[str]):
        try:
            self.proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise PipelineIOError(f"cannot start tokenizer {command!r}: {exc}") from exc
        self._next_id = 0

    def tokenize(self, code: str) -> TokenSequence:
        self._next_id += 1
        rid = f"t{self._next_id}"
        req = json.dumps({"id": rid, "text": code}, ensure_ascii=False)
        try:
            self.proc.stdin.write(req + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (OSError, ValueError) as exc:
            raise PipelineIOError(f"tokenizer pipe failure: {exc}") from exc
        if not line:
            raise PipelineIOError("tokenizer closed its stream")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TokenizeError(f"bad tokenizer response: {exc}") from exc
        if resp.get("id") != rid:
            raise TokenizeError(f"response id {resp.get('id')!r} != request id {rid!r}")
        tokens = [_escape_void(t) for t in resp["tokens"]]
        starts = line_start_offsets(code)
        lines = [offset_to_line(starts, off) for off in resp["offsets"]]
        if not tokens:
            raise TooShort("external tokenizer returned no tokens")
        return TokenSequence(tokens=tuple(tokens), line_index=tuple(lines), mode="external")

    def close(self) -> None:
        if self.proc.stdin:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
