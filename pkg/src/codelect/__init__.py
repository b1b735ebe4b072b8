"""Toolkit for building logical-equivalence code-selection benchmarks,
perturbation-based training sequences, and embedder evaluations."""

from .analysis import (IdentifierBinding, LineBlock, StatementInfo,
                       SyntaxSummary, bind_identifiers, def_use,
                       order_dependent, scope_line_blocks, shuffle_scopes,
                       summarize)
from .baselines import BaselineEmbedder, make_baseline
from .benchmark import (CandidatePairTask, Triplet, build_pair_tasks,
                        build_triplets, export_dataset, load_dataset)
from .corpus import (CodeUnit, IngestFilter, canonicalize, ingest_corpus,
                     load_corpus, normalization_hash)
from .errors import CodelectError, PipelineIOError, ValidationError
from .evalharness import (EvalReport, Verdict, aggregate, cosine,
                          grade_completions, parse_answer, render_prompt,
                          score_pair_task, similarity_table)
from .langspec import Language
from .perturb import (PerturbationRecord, PerturbedUnit, apply_kind,
                      deobfuscate, line_shuffle, obfuscate, token_shuffle)
from .protocol import HttpEmbedder, SubprocessEmbedder, embed_batch, serve_stdio
from .seeds import derive, hash64, hash64_str
from .traindata import (LossBreakdown, TokenSequence, TrainingExample,
                        assemble_loss, emit_obfuscated_example,
                        emit_original_example, emit_shuffled_example, tokenize)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
