"""Reading and writing the benchmark file layout, plus the dataset
construction filters (difficult-pair selection and shared-triple splitting).

A dataset directory holds six tab-separated triple files and gold links::

    rel_triples_1   rel_triples_2    (head <TAB> relation <TAB> tail)
    attr_triples_1  attr_triples_2   (entity <TAB> attribute <TAB> value)
    ent_links                        (source <TAB> target)
    <fold>/train_links  <fold>/valid_links  <fold>/test_links
    entity_types                     (entity <TAB> event|other, optional)

Triple lines are split on the first two tabs only, so literal values may
contain tabs.  Values keep any datatype or language suffix verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .kg import AlignmentSet, EntityTypeMap, KnowledgeGraph, Triple
from .stringsim import levenshtein_ratio, normalize_name

REL_FILES = ("rel_triples_1", "rel_triples_2")
ATTR_FILES = ("attr_triples_1", "attr_triples_2")
LINKS_FILE = "ent_links"
SPLIT_FILES = ("train_links", "valid_links", "test_links")
TYPES_FILE = "entity_types"

DIFFICULT_PAIR_THRESHOLD = 0.9


@dataclass(frozen=True)
class GraphStats:
    entities: int
    relations: int
    relation_triples: int
    attributes: int
    attribute_triples: int
    duplicates_removed: int


@dataclass(frozen=True)
class LoadStats:
    kg1: GraphStats
    kg2: GraphStats
    links: int
    duplicate_links_removed: int
    fold: str


@dataclass(frozen=True)
class Dataset:
    kg1: KnowledgeGraph
    kg2: KnowledgeGraph
    alignment: AlignmentSet
    entity_types: EntityTypeMap | None
    stats: LoadStats


def read_triples(path: str | Path) -> list[Triple]:
    path = Path(path)
    triples = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t", 2)
            if len(fields) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields")
            triples.append((fields[0], fields[1], fields[2]))
    return triples


def read_links(path: str | Path) -> list[tuple[str, str]]:
    path = Path(path)
    links = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise DataError(f"{path}:{lineno}: expected 2 tab-separated fields")
            links.append((fields[0], fields[1]))
    return links


def _resolve_fold(root: Path, fold: str | None) -> Path:
    if fold is not None:
        fold_dir = root / fold
        if not all((fold_dir / name).is_file() for name in SPLIT_FILES):
            raise DataError(f"fold {fold!r} under {root} lacks train/valid/test link files")
        return fold_dir
    if all((root / name).is_file() for name in SPLIT_FILES):
        return root
    candidates = sorted(
        {
            candidate.parent
            for candidate in root.rglob(SPLIT_FILES[0])
            if all((candidate.parent / name).is_file() for name in SPLIT_FILES)
        }
    )
    if not candidates:
        raise DataError(f"no train/valid/test link files found under {root}")
    if len(candidates) > 1:
        names = ", ".join(str(c.relative_to(root)) for c in candidates)
        raise DataError(f"multiple split folders under {root} ({names}); pass an explicit fold")
    return candidates[0]


def load_dataset(path: str | Path, fold: str | None = None) -> Dataset:
    """Load both graphs, the gold alignment with its splits, and entity types.

    Entities mentioned only in ``ent_links`` become isolated entities of their
    graph.  Split links must reference known gold links, and the three splits
    must partition them.
    """
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")
    links_raw = read_links(root / LINKS_FILE)
    seen: set[tuple[str, str]] = set()
    links: list[tuple[str, str]] = []
    duplicate_links = 0
    for pair in links_raw:
        if pair in seen:
            duplicate_links += 1
        else:
            seen.add(pair)
            links.append(pair)

    kg1 = KnowledgeGraph(
        relation_triples=read_triples(root / REL_FILES[0]),
        attribute_triples=read_triples(root / ATTR_FILES[0]),
        extra_entities=[s for s, _ in links],
    )
    kg2 = KnowledgeGraph(
        relation_triples=read_triples(root / REL_FILES[1]),
        attribute_triples=read_triples(root / ATTR_FILES[1]),
        extra_entities=[t for _, t in links],
    )

    fold_dir = _resolve_fold(root, fold)
    link_index = {pair: i for i, pair in enumerate(links)}
    split_indices: list[tuple[int, ...]] = []
    for name in SPLIT_FILES:
        indices = []
        for pair in read_links(fold_dir / name):
            if pair not in link_index:
                raise DataError(
                    f"{fold_dir / name}: link {pair[0]} -> {pair[1]} not in {LINKS_FILE}"
                )
            indices.append(link_index[pair])
        split_indices.append(tuple(indices))
    alignment = AlignmentSet(links, *split_indices)

    entity_types = None
    types_path = root / TYPES_FILE
    if types_path.is_file():
        tags = dict(read_links(types_path))
        entity_types = EntityTypeMap(tags)
        known = kg1.entities | kg2.entities
        for entity in entity_types.tags:
            if entity not in known:
                raise DataError(f"{types_path}: tagged entity not in either graph: {entity}")

    def graph_stats(kg: KnowledgeGraph) -> GraphStats:
        return GraphStats(
            entities=len(kg.entities),
            relations=len(kg.relations),
            relation_triples=len(kg.relation_triples),
            attributes=len(kg.attributes),
            attribute_triples=len(kg.attribute_triples),
            duplicates_removed=kg.duplicates_removed,
        )

    stats = LoadStats(
        kg1=graph_stats(kg1),
        kg2=graph_stats(kg2),
        links=len(alignment),
        duplicate_links_removed=duplicate_links,
        fold=str(fold_dir.relative_to(root)) if fold_dir != root else ".",
    )
    return Dataset(kg1=kg1, kg2=kg2, alignment=alignment, entity_types=entity_types, stats=stats)


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write the dataset layout; triple files are line-sorted."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    def write_rows(name: str, rows) -> None:
        (root / name).write_text(
            "".join("\t".join(row) + "\n" for row in rows), encoding="utf-8"
        )

    write_rows(REL_FILES[0], sorted(dataset.kg1.relation_triples))
    write_rows(REL_FILES[1], sorted(dataset.kg2.relation_triples))
    write_rows(ATTR_FILES[0], sorted(dataset.kg1.attribute_triples))
    write_rows(ATTR_FILES[1], sorted(dataset.kg2.attribute_triples))
    write_rows(LINKS_FILE, dataset.alignment.links)

    fold_dir = root if dataset.stats.fold == "." else root / dataset.stats.fold
    fold_dir.mkdir(parents=True, exist_ok=True)
    for name, pairs in zip(
        SPLIT_FILES,
        (
            dataset.alignment.train_links,
            dataset.alignment.valid_links,
            dataset.alignment.test_links,
        ),
    ):
        (fold_dir / name).write_text(
            "".join(f"{s}\t{t}\n" for s, t in pairs), encoding="utf-8"
        )
    if dataset.entity_types is not None:
        (root / TYPES_FILE).write_text(
            "".join(f"{e}\t{tag}\n" for e, tag in sorted(dataset.entity_types.tags.items())),
            encoding="utf-8",
        )


def filter_difficult_pairs(
    links: Sequence[tuple[str, str]],
    names: Mapping[str, str],
    threshold: float = DIFFICULT_PAIR_THRESHOLD,
    lowercase: bool = True,
) -> list[tuple[str, str]]:
    """Keep only the links whose name similarity is at most the threshold.

    Pairs with similarity strictly greater than the threshold are the easy
    ones and are dropped.
    """
    retained = []
    for source, target in links:
        for entity in (source, target):
            if entity not in names:
                raise DataError(f"no name available for linked entity {entity}")
        similarity = levenshtein_ratio(
            normalize_name(names[source], lowercase),
            normalize_name(names[target], lowercase),
        )
        if similarity <= threshold:
            retained.append((source, target))
    return retained


def shuffle_split_shared_triples(
    triples: Sequence[Triple], seed: int
) -> tuple[list[Triple], list[Triple]]:
    """Deterministically split shared triples into two disjoint halves.

    Uses a PCG64 generator seeded as given; each half keeps the input order,
    and the first half receives the extra element when the count is odd.
    """
    rng = np.random.default_rng(seed)
    permutation = rng.permutation(len(triples))
    half = (len(triples) + 1) // 2
    first = sorted(permutation[:half].tolist())
    second = sorted(permutation[half:].tolist())
    return [triples[i] for i in first], [triples[i] for i in second]


def make_difficult_dataset(
    dataset: Dataset,
    names1: Mapping[str, str],
    names2: Mapping[str, str],
    threshold: float = DIFFICULT_PAIR_THRESHOLD,
    seed: int = 0,
    shared_triples: Sequence[Triple] | None = None,
    lowercase: bool = True,
) -> Dataset:
    """Apply the difficult-pair filter (and optional shared-triple split) to an
    existing dataset, preserving the split structure of surviving links."""
    names = {**names1, **names2}
    retained = set(filter_difficult_pairs(dataset.alignment.links, names, threshold, lowercase))

    links = [pair for pair in dataset.alignment.links if pair in retained]
    new_index = {pair: i for i, pair in enumerate(links)}
    splits = []
    for old_indices in (dataset.alignment.train, dataset.alignment.valid, dataset.alignment.test):
        splits.append(
            tuple(
                new_index[dataset.alignment.links[i]]
                for i in old_indices
                if dataset.alignment.links[i] in retained
            )
        )
    alignment = AlignmentSet(links, *splits)

    rel1 = list(dataset.kg1.relation_triples)
    rel2 = list(dataset.kg2.relation_triples)
    if shared_triples:
        half1, half2 = shuffle_split_shared_triples(shared_triples, seed)
        rel1 += half1
        rel2 += half2
    kg1 = KnowledgeGraph(rel1, dataset.kg1.attribute_triples, extra_entities=[s for s, _ in links])
    kg2 = KnowledgeGraph(rel2, dataset.kg2.attribute_triples, extra_entities=[t for _, t in links])

    def graph_stats(kg: KnowledgeGraph) -> GraphStats:
        return GraphStats(
            entities=len(kg.entities),
            relations=len(kg.relations),
            relation_triples=len(kg.relation_triples),
            attributes=len(kg.attributes),
            attribute_triples=len(kg.attribute_triples),
            duplicates_removed=kg.duplicates_removed,
        )

    stats = LoadStats(
        kg1=graph_stats(kg1),
        kg2=graph_stats(kg2),
        links=len(alignment),
        duplicate_links_removed=0,
        fold=dataset.stats.fold,
    )
    return Dataset(
        kg1=kg1,
        kg2=kg2,
        alignment=alignment,
        entity_types=dataset.entity_types,
        stats=stats,
    )
