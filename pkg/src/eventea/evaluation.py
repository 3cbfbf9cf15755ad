"""Retrieval-based evaluation: cosine nearest neighbors, Hits@k, MRR,
recall split by entity category, and case-study reports."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .kg import EVENT, OTHER, EntityTypeMap


@dataclass(frozen=True)
class RankingResult:
    """Per-source top-k candidates plus the gold target's 1-based full rank."""

    sources: tuple[str, ...]
    candidates: dict[str, tuple[tuple[str, float], ...]]
    gold_ranks: dict[str, int]

    @property
    def ranks(self) -> list[int]:
        return [self.gold_ranks[s] for s in self.sources if s in self.gold_ranks]


def rank_candidates(
    pool: Sequence[str],
    scores: Sequence[float] | np.ndarray,
    k: int,
    gold_index: int | None = None,
) -> tuple[tuple[tuple[str, float], ...], int | None]:
    """Order a candidate pool by descending score.

    ``pool`` must already be sorted ascending by identifier; a stable sort on
    the negated scores then breaks ties by identifier.
    """
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    topk = tuple((pool[i], float(scores[i])) for i in order[:k])
    gold_rank = None
    if gold_index is not None:
        gold_rank = int(np.nonzero(order == gold_index)[0][0]) + 1
    return topk, gold_rank


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    """L2-normalize rows; zero rows stay zero so their cosine is 0."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    out = np.zeros_like(matrix)
    np.divide(matrix, norms, out=out, where=norms > 0)
    return out


def retrieve(
    source_embeddings: Mapping[str, np.ndarray],
    target_embeddings: Mapping[str, np.ndarray],
    gold: Mapping[str, str],
    k: int = 10,
    chunk_size: int = 1024,
) -> RankingResult:
    """Rank target candidates for each source by cosine similarity.

    The candidate pool is exactly the keys of ``target_embeddings``; callers
    decide whether that is the test-split targets or a whole graph.
    """
    if not target_embeddings:
        raise DataError("target candidate pool is empty")
    if k < 1:
        raise DataError(f"top-k count must be >= 1, got {k}")
    pool = sorted(target_embeddings)
    pool_index = {t: i for i, t in enumerate(pool)}
    targets = _unit_rows(np.asarray([target_embeddings[t] for t in pool], dtype=float))

    sources = tuple(sorted(source_embeddings))
    dim = targets.shape[1]
    candidates: dict[str, tuple[tuple[str, float], ...]] = {}
    gold_ranks: dict[str, int] = {}
    for start in range(0, len(sources), chunk_size):
        block = sources[start : start + chunk_size]
        queries = np.asarray([source_embeddings[s] for s in block], dtype=float)
        if queries.shape[1] != dim:
            raise DataError(
                f"embedding dimension mismatch: sources {queries.shape[1]}, targets {dim}"
            )
        scores = _unit_rows(queries) @ targets.T
        for row, source in enumerate(block):
            gold_index = None
            if source in gold:
                target = gold[source]
                if target not in pool_index:
                    raise DataError(f"gold target {target} not in candidate pool")
                gold_index = pool_index[target]
            topk, gold_rank = rank_candidates(pool, scores[row], k, gold_index)
            candidates[source] = topk
            if gold_rank is not None:
                gold_ranks[source] = gold_rank
    return RankingResult(sources=sources, candidates=candidates, gold_ranks=gold_ranks)


def hits_at(ranks: Iterable[int], k: int) -> float:
    """Fraction of gold ranks within the top k."""
    ranks = list(ranks)
    if not ranks:
        raise DataError("cannot compute Hits@k over zero ranks")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def mrr(ranks: Iterable[int]) -> float:
    """Mean reciprocal rank of the gold targets."""
    ranks = list(ranks)
    if not ranks:
        raise DataError("cannot compute MRR over zero ranks")
    return sum(1.0 / r for r in ranks) / len(ranks)


def recall_by_type(
    gold_ranks: Mapping[str, int], types: EntityTypeMap, k: int = 1
) -> dict[str, float | None]:
    """Hits@k within the event category, the other category, and overall.

    Categories with no members are reported as None.
    """
    buckets: dict[str, list[int]] = {EVENT: [], OTHER: []}
    for source, rank in gold_ranks.items():
        buckets[types.category(source)].append(rank)
    result: dict[str, float | None] = {}
    for category, ranks in buckets.items():
        result[category] = hits_at(ranks, k) if ranks else None
    all_ranks = list(gold_ranks.values())
    result["all"] = hits_at(all_ranks, k) if all_ranks else None
    return result


@dataclass(frozen=True)
class CaseRow:
    source: str
    rank: int
    target: str
    is_gold: bool
    scores: tuple[float, ...]


@dataclass(frozen=True)
class CaseReport:
    scorer_names: tuple[str, ...]
    rows: tuple[CaseRow, ...]

    def to_tsv(self) -> str:
        header = ["source", "rank", "target", "is_gold"] + [
            f"sim_{name}" for name in self.scorer_names
        ]
        lines = ["\t".join(header)]
        for row in self.rows:
            lines.append(
                "\t".join(
                    [row.source, str(row.rank), row.target, str(int(row.is_gold))]
                    + [f"{s:.6f}" for s in row.scores]
                )
            )
        return "\n".join(lines) + "\n"


def parse_case_report(text: str) -> CaseReport:
    lines = [line for line in text.splitlines() if line]
    header = lines[0].split("\t")
    scorer_names = tuple(name.removeprefix("sim_") for name in header[4:])
    rows = []
    for line in lines[1:]:
        fields = line.split("\t")
        rows.append(
            CaseRow(
                source=fields[0],
                rank=int(fields[1]),
                target=fields[2],
                is_gold=bool(int(fields[3])),
                scores=tuple(float(f) for f in fields[4:]),
            )
        )
    return CaseReport(scorer_names=scorer_names, rows=tuple(rows))


def case_report(
    sources: Sequence[str],
    ranking: RankingResult,
    gold: Mapping[str, str],
    scorers: Mapping[str, Callable[[str, str], float]],
    top: int = 3,
) -> CaseReport:
    """Nearest-neighbor case studies for selected source entities.

    Each requested source contributes its top candidates with every scorer's
    similarity; when the top-1 candidate is not the gold target, the gold
    target is appended with its full-pool rank.
    """
    scorer_names = tuple(scorers)
    rows: list[CaseRow] = []
    for source in sources:
        if source not in ranking.candidates:
            raise DataError(f"unknown entity in case report: {source}")
        gold_target = gold.get(source)
        top_targets = ranking.candidates[source][:top]
        for position, (target, _) in enumerate(top_targets, start=1):
            rows.append(
                CaseRow(
                    source=source,
                    rank=position,
                    target=target,
                    is_gold=target == gold_target,
                    scores=tuple(scorers[n](source, target) for n in scorer_names),
                )
            )
        wrong = gold_target is not None and (
            not top_targets or top_targets[0][0] != gold_target
        )
        if wrong:
            rows.append(
                CaseRow(
                    source=source,
                    rank=ranking.gold_ranks[source],
                    target=gold_target,
                    is_gold=True,
                    scores=tuple(scorers[n](source, gold_target) for n in scorer_names),
                )
            )
    return CaseReport(scorer_names=scorer_names, rows=tuple(rows))
