"""Mean-pooled embeddings from a saved transformer checkpoint.

One vector per input text: tokenize, run the base model in eval mode,
average the final hidden layer over the real token positions. Padding
exists only so a batch can share one tensor; padded positions are
masked out of attention and never reach the average, so a text gets
the same vector whether it travels alone or inside a batch.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")

import torch
from transformers import AutoModel, AutoTokenizer

POOLING_MODES = ("mean_last_layer",)


@dataclass(frozen=True)
class AdapterConfig:
    """Knobs for one serving session."""

    model_name: str
    device: str = "cpu"
    max_tokens: int | None = None
    pooling: str = "mean_last_layer"
    batch_size: int = 8

    def __post_init__(self) -> None:
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"unsupported pooling {self.pooling!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass
class EmbedResult:
    """Outcome for one text: a vector, or a per-item error."""

    values: list[float] | None
    truncated: bool = False
    error: str | None = None


class CheckpointEmbedder:
    """Loads a checkpoint once and turns batches of texts into vectors."""

    def __init__(self, config: AdapterConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_name)
        self.model = AutoModel.from_pretrained(config.model_name)
        self.model.to(config.device)
        self.model.eval()
        self.dims = int(self.model.config.hidden_size)
        self.embedder_id = f"hf-{Path(config.model_name).name}-mean"
        # Effective cap: whichever of the configured limit and the
        # model's position table is tighter. None means uncapped.
        model_cap = getattr(self.model.config, "max_position_embeddings", None)
        caps = [c for c in (config.max_tokens, model_cap) if c]
        self.max_tokens: int | None = min(caps) if caps else None
        # Filler id for padded slots. Any in-vocabulary id works: the
        # slot is masked out of attention and out of the mean.
        pad = self.tokenizer.pad_token_id
        if pad is None:
            pad = self.tokenizer.eos_token_id
        self._fill_id = int(pad) if pad is not None else 0

    def encode(self, texts: list[str]) -> list[EmbedResult]:
        """One EmbedResult per text, in input order."""
        if not texts:
            return []
        rows = self.tokenizer(list(texts))["input_ids"]
        results = [EmbedResult(None) for _ in texts]
        kept: list[int] = []
        clipped: list[list[int]] = []
        for i, ids in enumerate(rows):
            if self.max_tokens is not None and len(ids) > self.max_tokens:
                results[i].truncated = True
                ids = ids[: self.max_tokens]
            if not ids:
                results[i].error = "empty input: tokenizer produced no tokens"
                continue
            kept.append(i)
            clipped.append(ids)
        if kept:
            pooled = self._forward(clipped)
            for row, vec in zip(kept, pooled):
                if torch.all(torch.isfinite(vec)):
                    results[row].values = [float(x) for x in vec]
                else:
                    results[row].error = "non-finite activations"
        return results

    def _forward(self, batch: list[list[int]]) -> torch.Tensor:
        width = max(len(ids) for ids in batch)
        input_ids = torch.full((len(batch), width), self._fill_id, dtype=torch.long)
        mask = torch.zeros((len(batch), width), dtype=torch.long)
        for i, ids in enumerate(batch):
            input_ids[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            mask[i, : len(ids)] = 1
        input_ids = input_ids.to(self.config.device)
        mask = mask.to(self.config.device)
        with torch.no_grad():
            out = self.model(input_ids=input_ids, attention_mask=mask)
        hidden = out.last_hidden_state
        weights = mask.to(hidden.dtype).unsqueeze(-1)
        summed = (hidden * weights).sum(dim=1)
        counts = weights.sum(dim=1).clamp(min=1.0)
        return (summed / counts).to("cpu")
