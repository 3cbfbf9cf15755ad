"""In-memory model of a knowledge graph and of gold alignment between two graphs.

A graph is a set of entities, relations and attributes together with relation
triples (head, relation, tail) and attribute triples (entity, attribute,
literal value).  Entities are allowed to have no triples at all; such isolated
entities typically enter a graph through alignment links only.

Graphs are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import DataError

Triple = tuple[str, str, str]

# Attributes commonly carrying a human-readable entity name, most specific first.
DEFAULT_NAME_POLICY: tuple[str, ...] = (
    "http://www.w3.org/2000/01/rdf-schema#label",
    "http://www.w3.org/2004/02/skos/core#prefLabel",
    "http://xmlns.com/foaf/0.1/name",
    "http://schema.org/name",
)

EVENT = "event"
OTHER = "other"
ENTITY_CATEGORIES = (EVENT, OTHER)


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


class KnowledgeGraph:
    """Immutable knowledge graph with deduplicated, canonically sorted triples.

    Identifiers (entities, relations, attributes) are NFC-normalized so that
    cross-source IRIs differing only in Unicode composition compare equal.
    Literal values are kept verbatim, including any datatype or language
    suffix.
    """

    def __init__(
        self,
        relation_triples: Iterable[Triple] = (),
        attribute_triples: Iterable[Triple] = (),
        extra_entities: Iterable[str] = (),
    ):
        rel_seen: set[Triple] = set()
        attr_seen: set[Triple] = set()
        duplicates = 0
        for h, r, t in relation_triples:
            if not (h and r and t):
                raise DataError(f"relation triple with empty field: {(h, r, t)!r}")
            triple = (_nfc(h), _nfc(r), _nfc(t))
            if triple in rel_seen:
                duplicates += 1
            else:
                rel_seen.add(triple)
        for e, a, v in attribute_triples:
            if not (e and a):
                raise DataError(f"attribute triple with empty field: {(e, a, v)!r}")
            triple = (_nfc(e), _nfc(a), v)
            if triple in attr_seen:
                duplicates += 1
            else:
                attr_seen.add(triple)

        self.relation_triples: tuple[Triple, ...] = tuple(sorted(rel_seen))
        self.attribute_triples: tuple[Triple, ...] = tuple(sorted(attr_seen))
        self.duplicates_removed = duplicates

        entities: set[str] = set()
        for h, _, t in self.relation_triples:
            entities.add(h)
            entities.add(t)
        for e, _, _ in self.attribute_triples:
            entities.add(e)
        for e in extra_entities:
            if not e:
                raise DataError("empty entity identifier")
            entities.add(_nfc(e))
        self.entities: frozenset[str] = frozenset(entities)
        self.relations: frozenset[str] = frozenset(r for _, r, _ in self.relation_triples)
        self.attributes: frozenset[str] = frozenset(a for _, a, _ in self.attribute_triples)

        attrs_by_entity: dict[str, list[tuple[str, str]]] = {}
        for e, a, v in self.attribute_triples:
            attrs_by_entity.setdefault(e, []).append((a, v))
        self._attrs_by_entity = {e: tuple(avs) for e, avs in attrs_by_entity.items()}

        degree: dict[str, int] = {}
        for h, _, t in self.relation_triples:
            degree[h] = degree.get(h, 0) + 1
            degree[t] = degree.get(t, 0) + 1
        self._degree = degree

    def attributes_of(self, entity: str) -> tuple[tuple[str, str], ...]:
        """All (attribute, value) pairs of an entity, sorted."""
        return self._attrs_by_entity.get(entity, ())

    def degree(self, entity: str) -> int:
        """Undirected relation-triple degree (both endpoints counted)."""
        return self._degree.get(entity, 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self.entities == other.entities
            and self.relation_triples == other.relation_triples
            and self.attribute_triples == other.attribute_triples
        )

    def __repr__(self) -> str:
        return (
            f"KnowledgeGraph(entities={len(self.entities)}, "
            f"relations={len(self.relations)}, rel_triples={len(self.relation_triples)}, "
            f"attributes={len(self.attributes)}, attr_triples={len(self.attribute_triples)})"
        )


class AlignmentSet:
    """Gold 1-to-1 entity links plus a train/valid/test partition of them.

    ``train``, ``valid`` and ``test`` are index subsets into ``links``; they
    must be disjoint and cover every link.
    """

    def __init__(
        self,
        links: Sequence[tuple[str, str]],
        train: Sequence[int],
        valid: Sequence[int],
        test: Sequence[int],
    ):
        normalized = tuple((_nfc(s), _nfc(t)) for s, t in links)
        sources = [s for s, _ in normalized]
        targets = [t for _, t in normalized]
        if len(set(sources)) != len(sources):
            dup = next(s for s in sources if sources.count(s) > 1)
            raise DataError(f"source entity appears in more than one link: {dup}")
        if len(set(targets)) != len(targets):
            dup = next(t for t in targets if targets.count(t) > 1)
            raise DataError(f"target entity appears in more than one link: {dup}")
        self.links: tuple[tuple[str, str], ...] = normalized
        self.train = tuple(train)
        self.valid = tuple(valid)
        self.test = tuple(test)
        indices = sorted(self.train + self.valid + self.test)
        if indices != list(range(len(self.links))):
            raise DataError(
                "train/valid/test must partition the link list: "
                f"{len(self.train)}+{len(self.valid)}+{len(self.test)} indices "
                f"for {len(self.links)} links"
            )

    def _subset(self, indices: tuple[int, ...]) -> tuple[tuple[str, str], ...]:
        return tuple(self.links[i] for i in indices)

    @property
    def train_links(self) -> tuple[tuple[str, str], ...]:
        return self._subset(self.train)

    @property
    def valid_links(self) -> tuple[tuple[str, str], ...]:
        return self._subset(self.valid)

    @property
    def test_links(self) -> tuple[tuple[str, str], ...]:
        return self._subset(self.test)

    def __len__(self) -> int:
        return len(self.links)

    def __repr__(self) -> str:
        return (
            f"AlignmentSet(links={len(self.links)}, train={len(self.train)}, "
            f"valid={len(self.valid)}, test={len(self.test)})"
        )


class EntityTypeMap:
    """Entity → category tags; anything untagged counts as "other"."""

    def __init__(self, tags: Mapping[str, str]):
        for entity, tag in tags.items():
            if tag not in ENTITY_CATEGORIES:
                raise DataError(f"unknown entity category {tag!r} for {entity}")
        self.tags = {_nfc(e): tag for e, tag in tags.items()}

    def category(self, entity: str) -> str:
        return self.tags.get(entity, OTHER)

    def __len__(self) -> int:
        return len(self.tags)


class NameRecord(NamedTuple):
    name: str
    attribute: str | None  # None when the name fell back to the IRI fragment


def iri_fragment(iri: str) -> str:
    """Local fragment of an IRI with underscores replaced by spaces."""
    cut = max(iri.rfind("/"), iri.rfind("#"))
    fragment = iri[cut + 1 :].replace("_", " ").strip()
    return fragment if fragment else iri


def resolve_names(
    graph: KnowledgeGraph, policy: Sequence[str] = DEFAULT_NAME_POLICY
) -> dict[str, NameRecord]:
    """Pick one display name per entity.

    The first policy attribute carrying a value wins; among several values of
    that attribute the lexicographically smallest is chosen.  Entities without
    any name attribute fall back to their IRI fragment.
    """
    if not policy:
        raise DataError("name attribute policy must be non-empty")
    policy = tuple(_nfc(a) for a in policy)
    records: dict[str, NameRecord] = {}
    for entity in graph.entities:
        record = None
        values_by_attr: dict[str, list[str]] = {}
        for attr, value in graph.attributes_of(entity):
            values_by_attr.setdefault(attr, []).append(value)
        for attr in policy:
            values = [v for v in values_by_attr.get(attr, []) if v.strip()]
            if values:
                record = NameRecord(min(values), attr)
                break
        if record is None:
            record = NameRecord(iri_fragment(entity), None)
        records[entity] = record
    return records


def entity_names(
    graph: KnowledgeGraph, policy: Sequence[str] = DEFAULT_NAME_POLICY
) -> dict[str, str]:
    """Entity → display name under the given attribute preference policy."""
    return {e: rec.name for e, rec in resolve_names(graph, policy).items()}


def strip_isolated(graph: KnowledgeGraph) -> KnowledgeGraph:
    """Drop every entity without a relation triple, and its attribute triples."""
    connected = {h for h, _, t in graph.relation_triples} | {
        t for _, _, t in graph.relation_triples
    }
    return KnowledgeGraph(
        relation_triples=graph.relation_triples,
        attribute_triples=[
            (e, a, v) for e, a, v in graph.attribute_triples if e in connected
        ],
    )


@dataclass(frozen=True)
class DegreeStats:
    min_degree: int
    mean_degree: float
    max_degree: int
    isolated: int


def degree_stats(graph: KnowledgeGraph) -> DegreeStats:
    """Relation-degree summary over all entities (undirected multigraph)."""
    if not graph.entities:
        return DegreeStats(0, 0.0, 0, 0)
    degrees = [graph.degree(e) for e in graph.entities]
    return DegreeStats(
        min_degree=min(degrees),
        mean_degree=sum(degrees) / len(degrees),
        max_degree=max(degrees),
        isolated=sum(1 for d in degrees if d == 0),
    )
