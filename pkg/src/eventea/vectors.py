"""Token-vector provisioning for all encoder paths.

Two file-backed store flavors share one plain-text format:

* header line ``<count> <dim>``, where count is the number of record lines;
* one record per line: key, a tab, then ``dim`` space-separated decimal
  floats (shortest round-trip representation).

A static store keys records by vocabulary token.  A contextual store holds an
ordered vector list per input string; its records repeat the string with a
0-based position suffix ``#i``, one line per token position.

The hash fallback guarantees that encoding never fails: a token is hashed to a
64-bit seed (mixed with a global seed), which drives pseudo-normal draws that
are then L2-normalized.  The same token always yields the same unit vector.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError
from .kg import KnowledgeGraph

# Letters/digits optionally glued by hyphens, dashes, slashes or apostrophes,
# so "u-23", "1948–49" and "2010-05-14" stay whole.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’\-–—/][^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens: split on whitespace/punctuation, keep digit runs
    and joined tokens like hyphenated year ranges intact."""
    return _TOKEN_RE.findall(unicodedata.normalize("NFC", text).lower())


@dataclass(frozen=True, eq=False)
class TokenSequence:
    """Ordered token strings paired with their vectors (shape: len x dim)."""

    tokens: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise DataError(f"token vectors must be 2-d, got shape {self.vectors.shape}")
        if self.vectors.shape[0] != len(self.tokens):
            raise DataError(
                f"{len(self.tokens)} tokens but {self.vectors.shape[0]} vectors"
            )

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)


def mean_pool(seq: TokenSequence) -> np.ndarray:
    """Arithmetic mean of the sequence vectors; zero vector when empty."""
    if len(seq) == 0:
        return np.zeros(seq.dim)
    return seq.vectors.mean(axis=0)


def _format_vector(vector: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in vector)


def write_store(path: str | Path, records: Iterable[tuple[str, np.ndarray]], dim: int) -> None:
    records = list(records)
    lines = [f"{len(records)} {dim}"]
    for key, vector in records:
        if "\t" in key or "\n" in key:
            raise DataError(f"store key may not contain tab or newline: {key!r}")
        if vector.shape != (dim,):
            raise DataError(f"record {key!r} has shape {vector.shape}, expected ({dim},)")
        lines.append(f"{key}\t{_format_vector(vector)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_store(path: str | Path) -> tuple[list[tuple[str, np.ndarray]], int]:
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        header = handle.readline()
        parts = header.split()
        if len(parts) != 2:
            raise DataError(f"{path}:1: store header must be '<count> <dim>'")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}:1: store header must be '<count> <dim>'") from None
        records: list[tuple[str, np.ndarray]] = []
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            key, sep, values = line.partition("\t")
            if not sep or not key:
                raise DataError(f"{path}:{lineno}: expected 'key<TAB>floats'")
            try:
                vector = np.array([float(v) for v in values.split()], dtype=float)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable float") from None
            if vector.shape != (dim,):
                raise DataError(
                    f"{path}:{lineno}: expected {dim} floats, got {vector.shape[0]}"
                )
            records.append((key, vector))
    if len(records) != count:
        raise DataError(f"{path}: header promises {count} records, found {len(records)}")
    return records, dim


class StaticStore:
    """Vocabulary token → vector, all of one dimension."""

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int):
        self.vectors = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}
        self.dim = dim
        for key, vector in self.vectors.items():
            if vector.shape != (dim,):
                raise DataError(f"vector for {key!r} has shape {vector.shape}")

    @classmethod
    def load(cls, path: str | Path) -> "StaticStore":
        records, dim = read_store(path)
        return cls(dict(records), dim)

    def save(self, path: str | Path) -> None:
        write_store(path, sorted(self.vectors.items()), self.dim)

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


class ContextualStore:
    """Exact input string → ordered per-token vectors."""

    def __init__(self, sequences: Mapping[str, np.ndarray], dim: int):
        self.sequences = {k: np.asarray(v, dtype=float) for k, v in sequences.items()}
        self.dim = dim
        for key, matrix in self.sequences.items():
            if matrix.ndim != 2 or matrix.shape[1] != dim or matrix.shape[0] < 1:
                raise DataError(f"sequence for {key!r} has shape {matrix.shape}")

    @classmethod
    def load(cls, path: str | Path) -> "ContextualStore":
        records, dim = read_store(path)
        grouped: dict[str, dict[int, np.ndarray]] = {}
        for key, vector in records:
            base, sep, suffix = key.rpartition("#")
            if not sep or not suffix.isdigit():
                raise DataError(f"{path}: contextual key {key!r} lacks a '#<i>' suffix")
            grouped.setdefault(base, {})[int(suffix)] = vector
        sequences = {}
        for base, by_pos in grouped.items():
            if sorted(by_pos) != list(range(len(by_pos))):
                raise DataError(f"{path}: non-contiguous positions for key {base!r}")
            sequences[base] = np.stack([by_pos[i] for i in range(len(by_pos))])
        return cls(sequences, dim)

    def save(self, path: str | Path) -> None:
        records = []
        for base in sorted(self.sequences):
            for i, vector in enumerate(self.sequences[base]):
                records.append((f"{base}#{i}", vector))
        write_store(path, records, self.dim)

    def get(self, text: str) -> np.ndarray | None:
        return self.sequences.get(text)

    def __contains__(self, text: str) -> bool:
        return text in self.sequences

    def __len__(self) -> int:
        return len(self.sequences)


class HashFallback:
    """Deterministic unit vectors derived from a 64-bit token hash."""

    def __init__(self, dim: int, seed: int = 0):
        if dim < 1:
            raise DataError(f"fallback dimension must be positive, got {dim}")
        self.dim = dim
        self.seed = seed

    def vector(self, token: str) -> np.ndarray:
        digest = blake2b(token.encode("utf-8"), digest_size=8).digest()
        token_seed = int.from_bytes(digest, "big") ^ (self.seed & 0xFFFFFFFFFFFFFFFF)
        rng = np.random.default_rng(token_seed)
        vec = rng.standard_normal(self.dim)
        norm = np.linalg.norm(vec)
        if norm == 0.0:  # unreachable in practice, keeps the contract total
            vec[0] = 1.0
            norm = 1.0
        return vec / norm


class ProviderChain:
    """Token vectors from a contextual store, then a static store, then the
    hash fallback.  encode() always succeeds."""

    def __init__(
        self,
        fallback: HashFallback,
        static: StaticStore | None = None,
        contextual: ContextualStore | None = None,
    ):
        dims = {fallback.dim}
        if static is not None:
            dims.add(static.dim)
        if contextual is not None:
            dims.add(contextual.dim)
        if len(dims) != 1:
            raise DataError(f"provider dimensions disagree: {sorted(dims)}")
        self.fallback = fallback
        self.static = static
        self.contextual = contextual
        self.dim = fallback.dim

    def encode(self, text: str) -> TokenSequence:
        if self.contextual is not None:
            stored = self.contextual.get(text)
            if stored is not None:
                tokens = tuple(f"#{i}" for i in range(stored.shape[0]))
                return TokenSequence(tokens=tokens, vectors=np.array(stored, dtype=float))
        tokens = tuple(tokenize(text))
        if not tokens:
            return TokenSequence(tokens=(), vectors=np.zeros((0, self.dim)))
        rows = []
        for token in tokens:
            vector = self.static.get(token) if self.static is not None else None
            if vector is None:
                vector = self.fallback.vector(token)
            rows.append(vector)
        return TokenSequence(tokens=tokens, vectors=np.stack(rows))


def encode_sequence(provider: ProviderChain, text: str) -> TokenSequence:
    """Per-token vectors for a string; empty text gives an empty sequence."""
    return provider.encode(text)


def name_vector_baseline(
    provider: ProviderChain, names: Mapping[str, str]
) -> dict[str, np.ndarray]:
    """Entity vector = mean of its name's token vectors."""
    return {entity: mean_pool(provider.encode(name)) for entity, name in names.items()}


def concat_attribute_values(
    graph: KnowledgeGraph, entity: str, exclude: str | None = None
) -> str:
    """All attribute values of an entity joined by spaces.

    Values are ordered by (attribute identifier, value); the display-name
    attribute can be excluded so the name is not counted twice.
    """
    pairs = [(a, v) for a, v in graph.attributes_of(entity) if a != exclude]
    return " ".join(v for _, v in sorted(pairs))


def save_embeddings(path: str | Path, table: Mapping[str, np.ndarray], dim: int) -> None:
    """Write an entity-embedding table in the store format, keys sorted."""
    write_store(path, sorted((k, np.asarray(v, float)) for k, v in table.items()), dim)


def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    records, _ = read_store(path)
    return dict(records)
