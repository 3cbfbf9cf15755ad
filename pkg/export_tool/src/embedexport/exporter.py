"""Export token vectors from a pretrained contextual model or a word-vector
dump into the shared store format.

Contextual variants, per input string (special positions excluded):

* ``embed``      - the embedding-layer output,
* ``L4-avg``     - the mean of the last four hidden layers,
* ``L4-concat``  - the concatenation of the last four hidden layers
                   (dimension = 4x hidden size).

``static`` converts a word-vector text dump into a static store, one record
per vocabulary token.  Exports are deterministic for a fixed model snapshot:
repeated runs produce byte-identical stores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .stores import ExportError, read_word_vectors, write_store

CONTEXTUAL_VARIANTS = ("embed", "L4-avg", "L4-concat")
VARIANTS = CONTEXTUAL_VARIANTS + ("static",)

# hard ceiling when neither the tokenizer nor the flag caps sequence length
_DEFAULT_LENGTH_LIMIT = 512


@dataclass
class ExportReport:
    variant: str
    dim: int
    records: int
    keys: int
    warnings: list[str] = field(default_factory=list)

    def to_log(self) -> str:
        lines = [
            f"variant={self.variant} dim={self.dim} keys={self.keys} records={self.records}"
        ]
        if self.variant in CONTEXTUAL_VARIANTS:
            lines.append("special positions ([CLS]/[SEP]/padding) excluded from records")
        lines.extend(f"warning: {w}" for w in self.warnings)
        return "\n".join(lines) + "\n"


def _sequence_limit(tokenizer, model, max_length: int | None) -> int:
    if max_length is not None:
        return max_length
    candidates = [_DEFAULT_LENGTH_LIMIT]
    model_max = getattr(tokenizer, "model_max_length", None)
    if model_max and model_max < 10**6:
        candidates.append(int(model_max))
    positions = getattr(model.config, "max_position_embeddings", None)
    if positions:
        candidates.append(int(positions))
    return min(candidates)


def _variant_states(hidden_states, variant: str) -> torch.Tensor:
    if variant == "embed":
        return hidden_states[0]
    if len(hidden_states) - 1 < 4:
        raise ExportError(
            f"variant {variant} needs a model with at least 4 layers, "
            f"got {len(hidden_states) - 1}"
        )
    last_four = hidden_states[-4:]
    if variant == "L4-avg":
        return torch.stack(last_four).mean(dim=0)
    if variant == "L4-concat":
        return torch.cat(last_four, dim=-1)
    raise ExportError(f"unknown contextual variant: {variant}")


def export_contextual(
    model_dir: str | Path,
    texts: list[str],
    variant: str,
    out_path: str | Path,
    max_length: int | None = None,
    batch_size: int = 32,
) -> ExportReport:
    """Write one contextual-store record per distinct, non-empty input string."""
    from transformers import AutoModel, AutoTokenizer

    if variant not in CONTEXTUAL_VARIANTS:
        raise ExportError(f"variant must be one of {CONTEXTUAL_VARIANTS}, got {variant!r}")
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = AutoModel.from_pretrained(model_dir)
    model.eval()

    warnings: list[str] = []
    queue: list[str] = []
    seen: set[str] = set()
    for text in texts:
        if "\t" in text or "\n" in text:
            raise ExportError(f"input string may not contain tab or newline: {text!r}")
        if not text.strip():
            warnings.append("skipped empty input string")
            continue
        if text in seen:
            warnings.append(f"duplicate input string skipped: {text!r}")
            continue
        seen.add(text)
        queue.append(text)

    limit = _sequence_limit(tokenizer, model, max_length)
    records: list[tuple[str, np.ndarray]] = []
    dim: int | None = None
    for start in range(0, len(queue), batch_size):
        batch = queue[start : start + batch_size]
        full_lengths = [len(ids) for ids in tokenizer(batch, truncation=False)["input_ids"]]
        encoded = tokenizer(
            batch,
            padding=True,
            truncation=True,
            max_length=limit,
            return_special_tokens_mask=True,
            return_tensors="pt",
        )
        with torch.no_grad():
            output = model(
                input_ids=encoded["input_ids"],
                attention_mask=encoded["attention_mask"],
                output_hidden_states=True,
            )
        states = _variant_states(output.hidden_states, variant)
        if dim is None:
            dim = states.shape[-1]
        keep = (encoded["special_tokens_mask"] == 0) & (encoded["attention_mask"] == 1)
        for row, text in enumerate(batch):
            if full_lengths[row] > encoded["input_ids"].shape[1]:
                warnings.append(
                    f"truncated {text!r}: {full_lengths[row]} tokens exceed the limit {limit}"
                )
            vectors = states[row][keep[row]].numpy()
            if vectors.shape[0] == 0:
                warnings.append(f"no content tokens for {text!r}; skipped")
                continue
            for position, vector in enumerate(vectors):
                records.append((f"{text}#{position}", vector.astype(np.float64)))

    if dim is None:
        dim = _probe_dim(tokenizer, model, variant)
    write_store(out_path, records, dim)
    keys = len({key.rpartition("#")[0] for key, _ in records})
    return ExportReport(
        variant=variant, dim=dim, records=len(records), keys=keys, warnings=warnings
    )


def _probe_dim(tokenizer, model, variant: str) -> int:
    hidden = int(model.config.hidden_size)
    return 4 * hidden if variant == "L4-concat" else hidden


def export_static(vectors_path: str | Path, out_path: str | Path) -> ExportReport:
    """Convert a word-vector dump into a static store, sorted by token."""
    records, dim, warnings = read_word_vectors(vectors_path)
    records.sort(key=lambda pair: pair[0])
    write_store(out_path, records, dim)
    return ExportReport(
        variant="static", dim=dim, records=len(records), keys=len(records),
        warnings=warnings,
    )
