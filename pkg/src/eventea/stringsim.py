"""String-similarity baselines and the name-matching aligner built on them.

All four similarity functions are pure and map a pair of Unicode strings into
[0, 1].  The edit-distance and Jaro families are symmetric;
:func:`sequence_ratio` is order-sensitive because its leftmost-longest block
selection is anchored on the first argument.  Functions operate on Unicode
scalar values exactly as given; case folding and NFC normalization happen in
the aligner (see :func:`normalize_name`), not here.
"""

from __future__ import annotations

import unicodedata
from difflib import SequenceMatcher
from enum import Enum
from typing import Callable, Mapping

from .errors import DataError
from .evaluation import RankingResult, rank_candidates


def levenshtein_distance(a: str, b: str) -> int:
    """Minimal number of unit-cost insertions, deletions and substitutions."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,  # deletion
                    current[j - 1] + 1,  # insertion
                    previous[j - 1] + (ca != cb),  # substitution
                )
            )
        previous = current
    return previous[-1]


def levenshtein_ratio(a: str, b: str) -> float:
    """Normalized edit similarity with substitutions costing 2.

    ratio = (|a| + |b| - D2) / (|a| + |b|) where D2 is the edit distance under
    insert/delete cost 1 and substitute cost 2.  Two empty strings score 1.
    """
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                current.append(previous[j - 1])
            else:
                current.append(
                    min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + 2)
                )
        previous = current
    return (total - previous[-1]) / total


def jaro(a: str, b: str) -> float:
    """Jaro similarity: windowed character matches and transpositions.

    Returns 0 when there are no matches, which includes every pair with an
    empty side.
    """
    if not a or not b:
        return 0.0
    window = max(len(a), len(b)) // 2 - 1
    if window < 0:
        window = 0
    b_taken = [False] * len(b)
    a_matches: list[str] = []
    b_match_pos: list[int] = []
    for i, ca in enumerate(a):
        lo = max(0, i - window)
        hi = min(len(b), i + window + 1)
        for j in range(lo, hi):
            if not b_taken[j] and b[j] == ca:
                b_taken[j] = True
                a_matches.append(ca)
                b_match_pos.append(j)
                break
    m = len(a_matches)
    if m == 0:
        return 0.0
    b_matches = [b[j] for j in sorted(b_match_pos)]
    half_transpositions = sum(ca != cb for ca, cb in zip(a_matches, b_matches))
    t = half_transpositions / 2
    return (m / len(a) + m / len(b) + (m - t) / m) / 3


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1) -> float:
    """Jaro similarity boosted by the common prefix (capped at 4 characters)."""
    if not 0.0 <= prefix_scale <= 0.25:
        raise ValueError(f"prefix_scale must be in [0, 0.25], got {prefix_scale}")
    base = jaro(a, b)
    prefix = 0
    for ca, cb in zip(a, b):
        if ca != cb or prefix == 4:
            break
        prefix += 1
    return base + prefix * prefix_scale * (1.0 - base)


def sequence_ratio(a: str, b: str) -> float:
    """Ratcliff-Obershelp ratio: 2M / (|a| + |b|) over recursive longest
    matching blocks, with no junk heuristics."""
    return SequenceMatcher(None, a, b, autojunk=False).ratio()


class SimilarityKind(Enum):
    LEVENSHTEIN_RATIO = "lev-ratio"
    JARO = "jaro"
    JARO_WINKLER = "jaro-winkler"
    SEQUENCE_RATIO = "seq"

    @property
    def function(self) -> Callable[[str, str], float]:
        return _KIND_FUNCTIONS[self]


_KIND_FUNCTIONS = {
    SimilarityKind.LEVENSHTEIN_RATIO: levenshtein_ratio,
    SimilarityKind.JARO: jaro,
    SimilarityKind.JARO_WINKLER: jaro_winkler,
    SimilarityKind.SEQUENCE_RATIO: sequence_ratio,
}


def normalize_name(name: str, lowercase: bool = True) -> str:
    """NFC-normalize a name and, by default, lowercase it."""
    name = unicodedata.normalize("NFC", name)
    return name.lower() if lowercase else name


def name_match_align(
    source_names: Mapping[str, str],
    target_names: Mapping[str, str],
    kind: SimilarityKind,
    k: int,
    lowercase: bool = True,
    gold: Mapping[str, str] | None = None,
) -> RankingResult:
    """Rank every target entity against each source entity by name similarity.

    Ties are broken by ascending target identifier.  When ``gold`` maps a
    source to its reference target, the gold 1-based rank over the full
    candidate pool is recorded alongside the top-k list.
    """
    if k < 1:
        raise DataError(f"top-k count must be >= 1, got {k}")
    if not target_names:
        raise DataError("target entity set is empty")
    sim = kind.function
    pool = sorted(target_names)
    pool_norm = [normalize_name(target_names[t], lowercase) for t in pool]
    pool_index = {t: i for i, t in enumerate(pool)}

    sources = tuple(sorted(source_names))
    candidates: dict[str, tuple[tuple[str, float], ...]] = {}
    gold_ranks: dict[str, int] = {}
    for source in sources:
        query = normalize_name(source_names[source], lowercase)
        scores = [sim(query, t) for t in pool_norm]
        gold_index = None
        if gold is not None and source in gold:
            target = gold[source]
            if target not in pool_index:
                raise DataError(f"gold target {target} not in candidate pool")
            gold_index = pool_index[target]
        topk, gold_rank = rank_candidates(pool, scores, k, gold_index)
        candidates[source] = topk
        if gold_rank is not None:
            gold_ranks[source] = gold_rank
    return RankingResult(sources=sources, candidates=candidates, gold_ranks=gold_ranks)
