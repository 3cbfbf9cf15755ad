"""Writer for the shared token-vector store format, plus a reader for plain
word-vector dumps.

Store format: header line ``<count> <dim>``, then one record per line as
``key<TAB>floats`` with space-separated shortest round-trip decimals.
Contextual stores repeat an input string with a 0-based ``#i`` position
suffix, one line per token vector.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class ExportError(Exception):
    """Unusable input data or an unusable model."""


def write_store(path: str | Path, records: list[tuple[str, np.ndarray]], dim: int) -> None:
    lines = [f"{len(records)} {dim}"]
    for key, vector in records:
        if "\t" in key or "\n" in key:
            raise ExportError(f"store key may not contain tab or newline: {key!r}")
        if vector.shape != (dim,):
            raise ExportError(f"record {key!r} has shape {vector.shape}, expected ({dim},)")
        floats = " ".join(repr(float(x)) for x in vector)
        lines.append(f"{key}\t{floats}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_word_vectors(path: str | Path) -> tuple[list[tuple[str, np.ndarray]], int, list[str]]:
    """Parse a word2vec-style text dump: optional ``count dim`` header, then
    one ``token v1 .. vd`` line per word.  Returns (records, dim, warnings);
    the first occurrence of a duplicated token wins."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ExportError(f"{path}: empty word-vector file")
    start = 0
    header = lines[0].split()
    if len(header) == 2 and all(part.lstrip("-").isdigit() for part in header):
        start = 1
    records: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    warnings: list[str] = []
    dim: int | None = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split(" ")
        token = parts[0]
        if not token:
            raise ExportError(f"{path}:{lineno}: empty token")
        try:
            vector = np.array([float(x) for x in parts[1:] if x], dtype=np.float64)
        except ValueError:
            raise ExportError(f"{path}:{lineno}: unparseable float") from None
        if dim is None:
            dim = vector.shape[0]
            if dim == 0:
                raise ExportError(f"{path}:{lineno}: no vector components")
        if vector.shape != (dim,):
            raise ExportError(
                f"{path}:{lineno}: expected {dim} components, got {vector.shape[0]}"
            )
        if token in seen:
            warnings.append(f"duplicate token {token!r} at line {lineno}; keeping first")
            continue
        seen.add(token)
        records.append((token, vector))
    if dim is None:
        raise ExportError(f"{path}: no vector rows found")
    return records, dim, warnings


def read_input_strings(path: str | Path) -> list[str]:
    """One input string per line; blank lines are preserved as empty strings
    so the exporter can warn about them explicitly."""
    return Path(path).read_text(encoding="utf-8").splitlines()
