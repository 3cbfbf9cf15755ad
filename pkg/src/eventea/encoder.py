"""Time-aware literal encoder.

An entity's display name is split into time expressions and a remainder.  The
time tokens attend over the full name's token vectors with parameter-free
cosine-softmax weights; the attended vectors are averaged into a time vector.
The remainder and the concatenated other attribute values are mean-pooled and
fused, and a trainable affine layer maps the concatenation of both halves to
the final entity embedding:

    e = W [h; r + beta * g] + b        W: d x 2d, b: d

Two ablation switches mirror the encoder's study variants: without time
attention the time vector is zero and the remainder half uses the full
(unsplit) name; without other attributes the attribute vector is zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .kg import DEFAULT_NAME_POLICY, KnowledgeGraph, NameRecord, resolve_names
from .timesplit import split_time
from .vectors import (
    ProviderChain,
    TokenSequence,
    concat_attribute_values,
    mean_pool,
    read_store,
    write_store,
)


@dataclass(frozen=True, eq=False)
class AttentionResult:
    """Row-stochastic attention weights (time x name) and attended vectors."""

    weights: np.ndarray  # shape (k, m)
    attended: np.ndarray  # shape (k, d)


@dataclass(frozen=True, eq=False)
class TaeParams:
    """Trainable combination layer plus the frozen fusion weight."""

    weights: np.ndarray  # shape (d, 2d)
    bias: np.ndarray  # shape (d,)
    beta: float
    dim: int

    def __post_init__(self):
        d = self.dim
        if self.weights.shape != (d, 2 * d):
            raise DataError(f"weights must be {d}x{2 * d}, got {self.weights.shape}")
        if self.bias.shape != (d,):
            raise DataError(f"bias must have shape ({d},), got {self.bias.shape}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise DataError("non-finite encoder parameters")
        if self.beta < 0:
            raise DataError(f"beta must be non-negative, got {self.beta}")

    @classmethod
    def initial(cls, dim: int, beta: float) -> "TaeParams":
        eye = np.eye(dim)
        return cls(
            weights=np.concatenate([eye, eye], axis=1) * 0.5,
            bias=np.zeros(dim),
            beta=beta,
            dim=dim,
        )


def save_params(path, params: TaeParams) -> None:
    """Serialize params in the store file format.

    Records are the rows of W (width 2d), then the bias padded to width 2d
    with zeros, then a ``meta`` record whose first entry is beta.
    """
    width = 2 * params.dim
    records = [(f"W#{i}", params.weights[i]) for i in range(params.dim)]
    bias = np.zeros(width)
    bias[: params.dim] = params.bias
    meta = np.zeros(width)
    meta[0] = params.beta
    records.append(("b", bias))
    records.append(("meta", meta))
    write_store(path, records, width)


def load_params(path) -> TaeParams:
    records, width = read_store(path)
    if width % 2 != 0:
        raise DataError(f"{path}: params store width must be even, got {width}")
    dim = width // 2
    by_key = dict(records)
    if "b" not in by_key or "meta" not in by_key:
        raise DataError(f"{path}: params store missing 'b' or 'meta' record")
    try:
        weights = np.stack([by_key[f"W#{i}"] for i in range(dim)])
    except KeyError as missing:
        raise DataError(f"{path}: params store missing row {missing}") from None
    return TaeParams(
        weights=weights,
        bias=by_key["b"][:dim],
        beta=float(by_key["meta"][0]),
        dim=dim,
    )


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    out = np.zeros_like(matrix)
    np.divide(matrix, norms, out=out, where=norms > 0)
    return out


def time_attention(time_seq: TokenSequence, name_seq: TokenSequence) -> AttentionResult:
    """Attend each time-token vector over the name-token vectors.

    Weight of name token j for time token i is the softmax (over j) of their
    cosine similarity; cosine with a zero vector counts as 0.
    """
    if len(name_seq) == 0:
        raise DataError("attention requires a non-empty name sequence")
    if time_seq.dim != name_seq.dim:
        raise DataError(
            f"dimension mismatch: time {time_seq.dim}, name {name_seq.dim}"
        )
    if len(time_seq) == 0:
        return AttentionResult(
            weights=np.zeros((0, len(name_seq))),
            attended=np.zeros((0, name_seq.dim)),
        )
    scores = _unit_rows(time_seq.vectors) @ _unit_rows(name_seq.vectors).T
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    weights = shifted / shifted.sum(axis=1, keepdims=True)
    return AttentionResult(weights=weights, attended=weights @ name_seq.vectors)


def time_embedding(attended: np.ndarray) -> np.ndarray:
    """Average the attended vectors; zero vector when there are none."""
    if attended.shape[0] == 0:
        return np.zeros(attended.shape[1])
    return attended.mean(axis=0)


def fuse(remainder_vec: np.ndarray, attributes_vec: np.ndarray, beta: float) -> np.ndarray:
    """Balance the time-removed name against the other attribute values."""
    if remainder_vec.shape != attributes_vec.shape:
        raise DataError(
            f"shape mismatch: {remainder_vec.shape} vs {attributes_vec.shape}"
        )
    return remainder_vec + beta * attributes_vec


def combine(time_vec: np.ndarray, fused_vec: np.ndarray, params: TaeParams) -> np.ndarray:
    """Affine combination of the two halves: W [h; f] + b."""
    if time_vec.shape != (params.dim,) or fused_vec.shape != (params.dim,):
        raise DataError(
            f"expected two ({params.dim},) vectors, got {time_vec.shape} and {fused_vec.shape}"
        )
    return params.weights @ np.concatenate([time_vec, fused_vec]) + params.bias


def apply_params(params: TaeParams, combined_input: np.ndarray) -> np.ndarray:
    """W z + b for an already concatenated input z = [h; f]."""
    return params.weights @ combined_input + params.bias


def literal_components(
    name: str,
    attribute_text: str,
    provider: ProviderChain,
    use_time_attention: bool = True,
    use_other_attributes: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The (time, remainder, attributes) vectors for one entity's literals."""
    if use_time_attention:
        split = split_time(name)
        name_seq = provider.encode(name)
        time_seq = provider.encode(split.time)
        if len(time_seq) and len(name_seq):
            h = time_embedding(time_attention(time_seq, name_seq).attended)
        else:
            h = np.zeros(provider.dim)
        r = mean_pool(provider.encode(split.remainder))
    else:
        h = np.zeros(provider.dim)
        r = mean_pool(provider.encode(name))
    if use_other_attributes:
        g = mean_pool(provider.encode(attribute_text))
    else:
        g = np.zeros(provider.dim)
    return h, r, g


def entity_components(
    graph: KnowledgeGraph,
    entities: Iterable[str],
    provider: ProviderChain,
    use_time_attention: bool = True,
    use_other_attributes: bool = True,
    names: Mapping[str, NameRecord] | None = None,
    name_policy: Sequence[str] = DEFAULT_NAME_POLICY,
) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Bulk (h, r, g) components; names are resolved once per graph."""
    if names is None:
        names = resolve_names(graph, name_policy)
    components = {}
    for entity in entities:
        record = names.get(entity)
        if record is None:
            raise DataError(f"entity without a display name: {entity}")
        attribute_text = (
            concat_attribute_values(graph, entity, exclude=record.attribute)
            if use_other_attributes
            else ""
        )
        components[entity] = literal_components(
            record.name,
            attribute_text,
            provider,
            use_time_attention=use_time_attention,
            use_other_attributes=use_other_attributes,
        )
    return components


def assemble_inputs(
    components: Mapping[str, tuple[np.ndarray, np.ndarray, np.ndarray]], beta: float
) -> dict[str, np.ndarray]:
    """Concatenated encoder inputs z = [h; r + beta * g] per entity."""
    return {
        entity: np.concatenate([h, fuse(r, g, beta)])
        for entity, (h, r, g) in components.items()
    }


def encode_entities(
    graph: KnowledgeGraph,
    entities: Iterable[str],
    provider: ProviderChain,
    params: TaeParams,
    use_time_attention: bool = True,
    use_other_attributes: bool = True,
    names: Mapping[str, NameRecord] | None = None,
    name_policy: Sequence[str] = DEFAULT_NAME_POLICY,
) -> dict[str, np.ndarray]:
    """Final d-dimensional embeddings for a set of entities."""
    components = entity_components(
        graph,
        entities,
        provider,
        use_time_attention=use_time_attention,
        use_other_attributes=use_other_attributes,
        names=names,
        name_policy=name_policy,
    )
    inputs = assemble_inputs(components, params.beta)
    return {entity: apply_params(params, z) for entity, z in inputs.items()}


def encode_entity(
    graph: KnowledgeGraph,
    entity: str,
    provider: ProviderChain,
    params: TaeParams,
    use_time_attention: bool = True,
    use_other_attributes: bool = True,
    names: Mapping[str, NameRecord] | None = None,
    name_policy: Sequence[str] = DEFAULT_NAME_POLICY,
) -> np.ndarray:
    """Embedding of a single entity (see :func:`encode_entities` for bulk use)."""
    return encode_entities(
        graph,
        [entity],
        provider,
        params,
        use_time_attention=use_time_attention,
        use_other_attributes=use_other_attributes,
        names=names,
        name_policy=name_policy,
    )[entity]
