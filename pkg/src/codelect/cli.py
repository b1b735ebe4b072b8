"""Command-line entry point wiring the pipelines together.

Machine-readable one-line JSON summaries go to standard output; human
logs go to standard error. Exit codes: 0 success, 1 validation error,
2 I/O or protocol error.

Configuration precedence: flags > config file > environment > defaults.
Environment variables use the CODELECT_ prefix (CODELECT_SEED,
CODELECT_LANGUAGE, CODELECT_JOBS, CODELECT_CONFIG). The config file is
plain `key = value` lines with # comments.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import benchmark, evalharness, protocol
from . import report as reportmod
from .analysis import shuffle_scopes, summarize
from .baselines import make_baseline
from .corpus import IngestFilter, ingest_corpus, load_corpus
from .errors import (AlignmentSkipped, AnalysisUnavailable, CodelectError,
                     EmbedError, NothingToObfuscate, NothingToReplace,
                     NothingToShuffle, NoValidShuffle, PipelineIOError,
                     TooShort, ValidationError)
from .jsonio import (created_at, dumps, read_jsonl, read_text, sha256_text,
                     write_jsonl, write_text)
from .langspec import Language, extension_for
from .perturb import DEFAULT_MAX_SPAN, KINDS, PerturbationRecord, PerturbedUnit, apply_kind
from .seeds import derive
from .traindata import (VARIANTS, ExternalTokenizer, TrainingExample,
                        assemble_loss, emit_obfuscated_example,
                        emit_original_example, emit_shuffled_example)

log = logging.getLogger("codelect")

ENV_PREFIX = "CODELECT_"


class _Parser(argparse.ArgumentParser):
    # contract: unknown flags print usage and exit 1 (argparse default is 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_config_file(path: Path) -> dict[str, str]:
    config: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineIOError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def _resolve(args, key: str, cast, default):
    value = getattr(args, key, None)
    if value is None:
        raw = args.config_values.get(key)
        if raw is None:
            raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            try:
                value = cast(raw)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad value for {key}: {raw!r}") from exc
    if value is None:
        value = default
    setattr(args, key, value)


def _require_dir(path: Path, what: str) -> Path:
    path = Path(path)
    if not path.is_dir():
        raise PipelineIOError(f"{what} directory not found: {path}")
    return path


def _language(args) -> Language:
    if args.language is None:
        raise ValidationError("language is required (flag, config, or CODELECT_LANGUAGE)")
    return Language.parse(args.language)


# ---------------------------------------------------------------- ingest

def cmd_ingest(args) -> dict:
    in_dir = _require_dir(args.in_dir, "input")
    filt = IngestFilter(min_lines=args.min_lines, max_lines=args.max_lines,
                        max_tokens=args.max_tokens,
                        require_parse=not args.keep_unparsed,
                        dedup=not args.no_dedup)
    summary = ingest_corpus(in_dir, _language(args), filt, Path(args.out))
    summary["out"] = str(args.out)
    return summary


# --------------------------------------------------------------- analyze

def cmd_analyze(args) -> dict:
    _, units = load_corpus(_require_dir(args.in_dir, "corpus"))
    rows = []
    failed = 0
    for unit in sorted(units, key=lambda u: u.id):
        language = Language.parse(unit.language)
        try:
            summary = summarize(unit.source, language, unit.id)
        except AnalysisUnavailable as exc:
            failed += 1
            rows.append({"unit_id": unit.id, "error": str(exc)})
            continue
        rows.append({
            "unit_id": unit.id,
            "language": unit.language,
            "bindings": [{"name": b.name, "kind": b.kind,
                          "uses": len(b.use_spans)}
                         for b in summary.bindings],
            "statements": [{"index": s.index,
                            "line_range": list(s.line_range),
                            "defs": sorted(s.defs), "uses": sorted(s.uses),
                            "side_effect": s.has_side_effect}
                           for s in summary.statements],
            "shuffle_scopes": sorted(shuffle_scopes(summary)),
        })
    write_jsonl(Path(args.out), rows)
    return {"units": len(units), "analyzed": len(units) - failed,
            "failed": failed, "out": str(args.out)}


# --------------------------------------------------------------- perturb

_PERTURB_SKIPS = (NoValidShuffle, NothingToShuffle, NothingToObfuscate,
                  NothingToReplace, AnalysisUnavailable)


def cmd_perturb(args) -> dict:
    if args.kind not in KINDS:
        raise ValidationError(f"unknown perturbation kind {args.kind!r}")
    _, units = load_corpus(_require_dir(args.in_dir, "corpus"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    skipped: dict[str, int] = {}
    for unit in sorted(units, key=lambda u: u.id):
        language = Language.parse(unit.language)
        seed = derive(args.seed, f"perturb:{args.kind}", unit.id)
        try:
            summary = summarize(unit.source, language, unit.id)
            p = apply_kind(args.kind, unit, summary, seed,
                           fraction=args.fraction, count=args.count,
                           max_span=args.max_span)
        except _PERTURB_SKIPS as exc:
            reason = type(exc).__name__
            skipped[reason] = skipped.get(reason, 0) + 1
            continue
        rel = f"{unit.id}{extension_for(language)}"
        write_text(out_dir / rel, p.source + "\n")
        rows.append({"base_unit_id": unit.id, "path": rel,
                     "logically_equivalent": p.logically_equivalent,
                     "record": p.record.to_json()})
    write_jsonl(out_dir / "records.jsonl", rows)
    return {"kind": args.kind, "seed": args.seed, "written": len(rows),
            "skipped": dict(sorted(skipped.items())), "out": str(out_dir)}


# ----------------------------------------------------------- bench build

def cmd_bench_build(args) -> dict:
    _, units = load_corpus(_require_dir(args.in_dir, "corpus"))
    types = [t.strip() for t in args.types.split(",") if t.strip()]
    if not types:
        raise ValidationError("at least one pair type is required")
    triplets = benchmark.build_triplets(units, args.seed, args.n)
    units_by_id = {u.id: u for u in units}
    tasks, extras = benchmark.build_pair_tasks(
        triplets, units_by_id, types, args.seed,
        replace_count=args.count, max_span=args.max_span)
    manifest = benchmark.export_dataset(tasks, extras, Path(args.out),
                                        args.seed, args.n, types)
    manifest["out"] = str(args.out)
    return manifest


# ------------------------------------------------------------- traindata

def _find_perturbation_records(args) -> list[Path]:
    paths: list[Path] = []
    if args.perturbations:
        for raw in args.perturbations:
            p = Path(raw)
            if p.is_dir():
                p = p / "records.jsonl"
            if not p.is_file():
                raise PipelineIOError(f"perturbation records not found: {raw}")
            paths.append(p)
    else:
        root = Path(args.in_dir)
        paths = sorted(q for q in root.rglob("records.jsonl") if q.is_file())
    return paths


def _corpus_dir_for_emit(args) -> Path:
    root = Path(args.in_dir)
    if (root / "manifest.jsonl").is_file():
        return root
    if (root / "corpus" / "manifest.jsonl").is_file():
        return root / "corpus"
    raise PipelineIOError(f"no corpus manifest under {root}")


def cmd_traindata_emit(args) -> dict:
    _require_dir(args.in_dir, "input")
    corpus_dir = _corpus_dir_for_emit(args)
    _, units = load_corpus(corpus_dir)
    units_by_id = {u.id: u for u in units}

    # first record wins per (unit, kind), in sorted path order
    by_kind: dict[str, dict[str, PerturbedUnit]] = {"line_shuffle": {}, "obfuscate": {}}
    for records_path in _find_perturbation_records(args):
        for row in read_jsonl(records_path):
            kind = row["record"]["kind"]
            if kind not in by_kind:
                continue
            uid = row["base_unit_id"]
            if uid in by_kind[kind] or uid not in units_by_id:
                continue
            source = read_text(records_path.parent / row["path"]).rstrip("\n")
            by_kind[kind][uid] = PerturbedUnit(
                base_unit_id=uid, source=source,
                record=PerturbationRecord.from_json(row["record"]),
                logically_equivalent=row.get("logically_equivalent", False))

    wanted = list(VARIANTS) if args.variant == "all" else [args.variant]
    tokenizer = ExternalTokenizer(args.tokenizer.split()) if args.tokenizer else None
    rows = []
    emitted = {v: 0 for v in wanted}
    skipped: dict[str, dict[str, int]] = {}

    def skip(variant: str, reason: str) -> None:
        bucket = skipped.setdefault(variant, {})
        bucket[reason] = bucket.get(reason, 0) + 1

    try:
        for unit in sorted(units, key=lambda u: u.id):
            language = Language.parse(unit.language)
            for variant in wanted:
                try:
                    if variant == "original":
                        example = emit_original_example(unit)
                    elif variant == "line_shuffled":
                        p = by_kind["line_shuffle"].get(unit.id)
                        if p is None:
                            skip(variant, "NoPerturbation")
                            continue
                        example = emit_shuffled_example(p, language)
                    else:
                        p = by_kind["obfuscate"].get(unit.id)
                        if p is None:
                            skip(variant, "NoPerturbation")
                            continue
                        example = emit_obfuscated_example(
                            p, unit, mode=args.mode, tokenizer=tokenizer)
                except (TooShort, AlignmentSkipped) as exc:
                    skip(variant, type(exc).__name__)
                    continue
                rows.append(example.to_json())
                emitted[variant] += 1
    finally:
        if tokenizer is not None:
            tokenizer.close()
    write_jsonl(Path(args.out), rows)
    return {"examples": len(rows), "emitted": emitted,
            "skipped": {v: dict(sorted(skipped[v].items())) for v in sorted(skipped)},
            "out": str(args.out)}


def cmd_traindata_loss(args) -> dict:
    examples = [TrainingExample.from_json(row)
                for row in read_jsonl(Path(args.examples))]
    lp_rows = read_jsonl(Path(args.logprobs))
    by_index: dict[int, list[float]] = {}
    for row in lp_rows:
        if "index" not in row or "logprobs" not in row:
            raise ValidationError("logprob rows need index and logprobs fields")
        by_index[int(row["index"])] = row["logprobs"]
    if sorted(by_index) != list(range(len(examples))):
        raise ValidationError(
            f"logprob indexes do not cover 0..{len(examples) - 1} exactly")
    logprobs = [by_index[i] for i in range(len(examples))]
    breakdown = assemble_loss(examples, logprobs)
    return breakdown.to_json()


# ------------------------------------------------------------------ eval

def _load_tasks(dataset: str) -> tuple[list, Path]:
    path = Path(dataset)
    if path.is_dir():
        tasks, _ = benchmark.load_dataset(path)
        return tasks, path / benchmark.DATASET_FILE
    tasks = [benchmark.CandidatePairTask.from_json(row) for row in read_jsonl(path)]
    return tasks, path


def _task_texts(tasks, dataset_path: Path) -> dict[str, str]:
    texts: dict[str, str] = {}
    for task in tasks:
        for text in (task.query, task.candidate_a, task.candidate_b):
            texts[sha256_text(text)] = text
    bundle = dataset_path.parent
    for row in benchmark.load_perturbation_sources(bundle).values():
        texts[sha256_text(row["source"])] = row["source"]
    return texts


def _make_embedder(args):
    picked = [name for name, val in (("--embedder", args.embedder),
                                     ("--baseline", args.baseline),
                                     ("--http", args.http)) if val]
    if len(picked) != 1:
        raise ValidationError("pick exactly one of --embedder, --baseline, --http")
    if args.embedder:
        return protocol.SubprocessEmbedder(args.embedder)
    if args.http:
        return protocol.HttpEmbedder(args.http)
    return make_baseline(args.baseline, dims=args.dims, seed=args.baseline_seed)


def _write_vectors(out: Path, embedder_id: str, dims: int,
                   vectors: dict, errors: dict) -> None:
    rows: list[dict] = [{"type": "header", "embedder_id": embedder_id,
                         "dims": dims, "created_at": created_at()}]
    for digest in sorted(set(vectors) | set(errors)):
        if digest in vectors:
            rows.append({"type": "vector", "digest": digest,
                         "values": [float(x) for x in vectors[digest]]})
        else:
            rows.append({"type": "error", "digest": digest,
                         "error": errors[digest]})
    write_jsonl(out, rows)


def cmd_eval_embed(args) -> dict:
    tasks, dataset_path = _load_tasks(args.dataset)
    texts = _task_texts(tasks, dataset_path)
    items = [(digest, texts[digest]) for digest in sorted(texts)]
    embedder = _make_embedder(args)
    try:
        try:
            vectors, errors = protocol.embed_batch(items, embedder,
                                                   timeout=args.timeout)
        except EmbedError as exc:
            partial = dict(exc.partial) if isinstance(exc.partial, dict) else {}
            missing = {d for d, _ in items} - set(partial)
            _write_vectors(Path(args.out), embedder.embedder_id, embedder.dims,
                           partial, {d: "embedder failed" for d in missing})
            raise PipelineIOError(
                f"embedding failed after {len(partial)} vectors: {exc}") from exc
    finally:
        embedder.close()
    _write_vectors(Path(args.out), embedder.embedder_id, embedder.dims,
                   vectors, errors)
    return {"embedder_id": embedder.embedder_id, "dims": embedder.dims,
            "texts": len(items), "vectors": len(vectors),
            "errors": len(errors), "out": str(args.out)}


def _load_vectors(path: Path) -> tuple[str, dict[str, np.ndarray]]:
    embedder_id = ""
    vectors: dict[str, np.ndarray] = {}
    for row in read_jsonl(path):
        if row.get("type") == "header":
            embedder_id = row.get("embedder_id", "")
        elif row.get("type") == "vector":
            vectors[row["digest"]] = np.asarray(row["values"], dtype=np.float64)
    return embedder_id, vectors


def cmd_eval_score(args) -> dict:
    tasks, dataset_path = _load_tasks(args.dataset)
    embedder_id, vectors = _load_vectors(Path(args.vectors))
    dataset_hash = sha256_text(read_text(dataset_path))
    result = evalharness.score_dataset(tasks, vectors, embedder_id=embedder_id,
                                       dataset_hash=dataset_hash).to_json()
    write_text(Path(args.report), dumps(result) + "\n")
    return result


def cmd_eval_simtable(args) -> dict:
    tasks, dataset_path = _load_tasks(args.dataset)
    perturbations = benchmark.load_perturbation_sources(dataset_path.parent)
    entries = benchmark.simtable_entries(tasks, perturbations)
    _, vectors = _load_vectors(Path(args.vectors))
    rows, warnings = evalharness.similarity_table(entries, vectors,
                                                  args.n, args.seed)
    write_text(Path(args.out), evalharness.simtable_csv(rows))
    for warning in warnings:
        log.warning("%s", warning)
    return {"rows": len(rows), "warnings": warnings, "out": str(args.out)}


def cmd_eval_prompts(args) -> dict:
    tasks, _ = _load_tasks(args.dataset)
    rows = [{"task_id": t.task_id, "pair_type": t.pair_type,
             "prompt": evalharness.render_prompt(t)}
            for t in sorted(tasks, key=lambda t: t.task_id)]
    write_jsonl(Path(args.out), rows)
    return {"prompts": len(rows), "out": str(args.out)}


def cmd_eval_grade(args) -> dict:
    tasks, _ = _load_tasks(args.dataset)
    completions: dict[str, str] = {}
    for row in read_jsonl(Path(args.completions)):
        if "task_id" not in row or "completion" not in row:
            raise ValidationError("completion rows need task_id and completion")
        completions[row["task_id"]] = row["completion"]
    result = evalharness.grade_completions(tasks, completions)
    write_text(Path(args.report), dumps(result) + "\n")
    return result


# -------------------------------------------------------- baseline serve

def cmd_baseline_serve(args) -> dict | None:
    embedder = make_baseline(args.kind, dims=args.dims, seed=args.seed)
    protocol.serve_stdio(embedder)
    return None  # stdout belonged to the protocol


# ---------------------------------------------------------------- report

def cmd_report(args) -> dict:
    return reportmod.write_consolidated(_require_dir(args.run, "run"),
                                        Path(args.out) if args.out else None)


# ----------------------------------------------------------------- wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="codelect",
                     description="Code-selection benchmark toolkit")
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker pool size (stages are deterministic "
                             "regardless; accepted for interface parity)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p, default=None):
        p.add_argument("--seed", type=int, default=default)

    p = sub.add_parser("ingest", help="build a corpus from raw files")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--language", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--min-lines", type=int, default=3)
    p.add_argument("--max-lines", type=int, default=150)
    p.add_argument("--max-tokens", type=int, default=1024)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--keep-unparsed", action="store_true",
                   help="admit files that fail structural validation")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="per-unit bindings and def-use facts")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("perturb", help="apply one perturbation kind to a corpus")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--kind", required=True, choices=KINDS)
    add_seed(p)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--max-span", type=int, default=DEFAULT_MAX_SPAN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    bench = sub.add_parser("bench", help="benchmark datasets").add_subparsers(
        dest="subcommand", required=True)
    p = bench.add_parser("build", help="triplets and candidate-pair tasks")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--n", type=int, required=True, help="triplet count")
    add_seed(p)
    p.add_argument("--types", default=",".join(benchmark.PAIR_TYPES))
    p.add_argument("--count", type=int, default=3,
                   help="replacement count for kwr/smr candidates")
    p.add_argument("--max-span", type=int, default=DEFAULT_MAX_SPAN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench_build)

    td = sub.add_parser("traindata", help="training sequences and loss").add_subparsers(
        dest="subcommand", required=True)
    p = td.add_parser("emit", help="training examples from corpus + perturbations")
    p.add_argument("--in", dest="in_dir", required=True,
                   help="run directory holding the corpus and perturbation records")
    p.add_argument("--perturbations", action="append", default=None,
                   help="records.jsonl path or its directory (repeatable; "
                        "default: search --in recursively)")
    p.add_argument("--variant", default="all",
                   choices=[*VARIANTS, "all"])
    p.add_argument("--mode", default="word", choices=["word", "external"])
    p.add_argument("--tokenizer", default=None,
                   help="external tokenizer command (mode=external)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_traindata_emit)
    p = td.add_parser("loss", help="combined loss from recorded logprobs")
    p.add_argument("--examples", required=True)
    p.add_argument("--logprobs", required=True)
    p.set_defaults(func=cmd_traindata_loss)

    ev = sub.add_parser("eval", help="score embedders and prompts").add_subparsers(
        dest="subcommand", required=True)
    p = ev.add_parser("embed", help="collect vectors for a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--embedder", default=None, help="child-process command")
    p.add_argument("--baseline", default=None, choices=["bag", "bigram"])
    p.add_argument("--http", default=None, help="base URL of an HTTP embedder")
    p.add_argument("--dims", type=int, default=4096)
    p.add_argument("--baseline-seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_embed)
    p = ev.add_parser("score", help="verdicts and per-type accuracy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval_score)
    p = ev.add_parser("simtable", help="origin-to-variant similarity table")
    p.add_argument("--dataset", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--n", type=int, default=1000)
    add_seed(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_simtable)
    p = ev.add_parser("prompts", help="render selection prompts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_prompts)
    p = ev.add_parser("grade", help="grade completion files")
    p.add_argument("--dataset", required=True)
    p.add_argument("--completions", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval_grade)

    bl = sub.add_parser("baseline", help="deterministic embedders").add_subparsers(
        dest="subcommand", required=True)
    p = bl.add_parser("serve", help="speak the wire protocol on stdio")
    p.add_argument("--kind", default="bag", choices=["bag", "bigram"])
    p.add_argument("--dims", type=int, default=4096)
    add_seed(p, default=0)
    p.set_defaults(func=cmd_baseline_serve)

    p = sub.add_parser("report", help="consolidated markdown + CSV report")
    p.add_argument("--run", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config_path = args.config or os.environ.get(ENV_PREFIX + "CONFIG")
        args.config_values = load_config_file(config_path) if config_path else {}
        _resolve(args, "jobs", int, 1)
        if args.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        if hasattr(args, "seed"):
            _resolve(args, "seed", int, 0)
        if hasattr(args, "language"):
            _resolve(args, "language", str, None)
        summary = args.func(args)
    except CodelectError as exc:
        code = 2 if isinstance(exc, PipelineIOError) else 1
        log.error("%s", exc)
        print(dumps({"type": "error", "error_class": type(exc).__name__,
                     "message": str(exc), "exit_code": code}))
        return code
    except OSError as exc:
        log.error("%s", exc)
        print(dumps({"type": "error", "error_class": type(exc).__name__,
                     "message": str(exc), "exit_code": 2}))
        return 2
    if summary is not None:
        print(dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
