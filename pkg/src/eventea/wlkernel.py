"""Cross-graph structural similarity via Weisfeiler-Lehman subtree kernels.

Both graphs are reduced to undirected label graphs (relation identity
dropped, isolated entities removed).  Aligned entity pairs share a label;
every other entity gets a fresh one.  The kernel is the dot product of
label-count feature vectors accumulated over WL refinement iterations, with
signature compression shared across both graphs, normalized to [0, 1] by the
self kernels.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .kg import KnowledgeGraph, strip_isolated


@dataclass(frozen=True)
class LabeledGraph:
    nodes: tuple[str, ...]
    labels: dict[str, int]
    adjacency: dict[str, tuple[str, ...]]


def _label_graph(graph: KnowledgeGraph, labels: dict[str, int]) -> LabeledGraph:
    edges: set[tuple[str, str]] = set()
    for head, _, tail in graph.relation_triples:
        if head == tail:
            continue  # self-loops carry no subtree information
        edges.add((head, tail) if head <= tail else (tail, head))
    neighbors: dict[str, set[str]] = {node: set() for node in labels}
    for a, b in edges:
        neighbors[a].add(b)
        neighbors[b].add(a)
    return LabeledGraph(
        nodes=tuple(sorted(labels)),
        labels=labels,
        adjacency={node: tuple(sorted(peers)) for node, peers in neighbors.items()},
    )


def build_label_graphs(
    kg1: KnowledgeGraph, kg2: KnowledgeGraph, links: Iterable[tuple[str, str]]
) -> tuple[LabeledGraph, LabeledGraph]:
    """Shared integer labels for aligned pairs, fresh labels elsewhere.

    Expects graphs already stripped of isolated entities; links whose
    endpoints were stripped away fall back to fresh labels.
    """
    labels1: dict[str, int] = {}
    labels2: dict[str, int] = {}
    next_label = 0
    for source, target in links:
        if source in kg1.entities and target in kg2.entities:
            labels1[source] = next_label
            labels2[target] = next_label
            next_label += 1
    for entity in sorted(kg1.entities):
        if entity not in labels1:
            labels1[entity] = next_label
            next_label += 1
    for entity in sorted(kg2.entities):
        if entity not in labels2:
            labels2[entity] = next_label
            next_label += 1
    return _label_graph(kg1, labels1), _label_graph(kg2, labels2)


class LabelCompressor:
    """Shared mapping from (iteration, label, neighbor multiset) signatures to
    dense integer labels, so both graphs relabel consistently."""

    def __init__(self):
        self._table: dict[tuple, int] = {}

    def compress(self, signature: tuple) -> int:
        if signature not in self._table:
            self._table[signature] = len(self._table)
        return self._table[signature]


def wl_feature_vector(
    graph: LabeledGraph, iterations: int, compressor: LabelCompressor | None = None
) -> Counter:
    """Counts of (iteration, label) features over WL refinements 0..h."""
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if compressor is None:
        compressor = LabelCompressor()
    features: Counter = Counter()
    current = dict(graph.labels)
    features.update((0, label) for label in current.values())
    for iteration in range(1, iterations + 1):
        relabeled = {}
        for node in graph.nodes:
            signature = (
                iteration,
                current[node],
                tuple(sorted(current[peer] for peer in graph.adjacency[node])),
            )
            relabeled[node] = compressor.compress(signature)
        current = relabeled
        features.update((iteration, label) for label in current.values())
    return features


def _dot(a: Counter, b: Counter) -> int:
    if len(b) < len(a):
        a, b = b, a
    return sum(count * b[key] for key, count in a.items() if key in b)


def wl_similarity(
    kg1: KnowledgeGraph,
    kg2: KnowledgeGraph,
    links: Sequence[tuple[str, str]],
    iterations: int = 3,
) -> float:
    """Normalized WL subtree kernel between two graphs under a gold alignment.

    Returns k(G1,G2) / sqrt(k(G1,G1) * k(G2,G2)), or 0 when either graph is
    empty after removing isolated entities.
    """
    stripped1 = strip_isolated(kg1)
    stripped2 = strip_isolated(kg2)
    graph1, graph2 = build_label_graphs(stripped1, stripped2, links)
    compressor = LabelCompressor()
    features1 = wl_feature_vector(graph1, iterations, compressor)
    features2 = wl_feature_vector(graph2, iterations, compressor)
    self1 = _dot(features1, features1)
    self2 = _dot(features2, features2)
    if self1 == 0 or self2 == 0:
        return 0.0
    return _dot(features1, features2) / math.sqrt(self1 * self2)
