"""Contrastive alignment learning over the encoder's combination layer.

The loss over aligned pairs P and corrupted pairs N is

    L = sum_P ||e_i - e_j|| + sum_N max(0, margin - ||e_i' - e_j'||)

Only the affine layer (W, b) is trained; token vectors and the fusion weight
stay frozen.  Because the bias cancels in every pairwise difference, its
gradient is identically zero; it is kept for the encoder contract.  Updates
use Adam-style moments, and training stops early when validation Hits@1 does
not improve for a configured number of epochs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .encoder import TaeParams, apply_params, assemble_inputs, entity_components
from .errors import DataError, DivergenceError
from .evaluation import hits_at, retrieve
from .kg import DEFAULT_NAME_POLICY
from .vectors import ProviderChain

# Hyperparameter grid explored when a full search is requested; the defaults
# in TrainConfig are the selected values.
MARGIN_GRID = (0.5, 1.5, 3.0, 3.5, 4.5, 5.0)
BETA_GRID = (0.01, 0.02, 0.05, 0.1)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

_MAX_RESAMPLE = 100


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 768
    batch_size: int = 256
    learning_rate: float = 1e-4
    margin: float = 3.0
    beta: float = 0.02
    negatives_per_positive: int = 5
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "batch_size", "negatives_per_positive", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.margin <= 0:
            raise DataError(f"margin must be positive, got {self.margin}")
        if self.learning_rate < 0 or self.beta < 0:
            raise DataError("learning_rate and beta must be non-negative")

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        """Parse a flat key=value text file; unknown keys are rejected."""
        types = {f.name: f.type for f in fields(cls)}
        values: dict[str, object] = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise DataError(f"{path}:{lineno}: unknown config line {raw!r}")
            values[key] = int(value) if types[key] == "int" else float(value)
        return cls(**values)

    def to_file(self, path: str | Path) -> None:
        lines = [f"{f.name}={getattr(self, f.name)}" for f in fields(self)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class PairBatch:
    positives: tuple[tuple[str, str], ...]
    negatives: tuple[tuple[str, str], ...]


def sample_negatives(
    positives: Sequence[tuple[str, str]],
    source_pool: Sequence[str],
    target_pool: Sequence[str],
    negatives_per_positive: int,
    rng: np.random.Generator,
    gold: frozenset[tuple[str, str]],
) -> PairBatch:
    """Corrupt each positive by replacing one side with a uniform draw.

    Draws that reproduce a gold link are rejected and resampled; if a positive
    cannot be corrupted the data is degenerate and an error is raised.
    """
    if not source_pool or not target_pool:
        raise DataError("negative sampling requires non-empty entity pools")
    negatives: list[tuple[str, str]] = []
    for source, target in positives:
        for _ in range(negatives_per_positive):
            candidate = None
            for _ in range(_MAX_RESAMPLE):
                if rng.integers(2) == 0:
                    pair = (source_pool[rng.integers(len(source_pool))], target)
                else:
                    pair = (source, target_pool[rng.integers(len(target_pool))])
                if pair not in gold:
                    candidate = pair
                    break
            if candidate is None:
                raise DataError(
                    f"cannot corrupt pair ({source}, {target}): pools contain no non-gold replacement"
                )
            negatives.append(candidate)
    return PairBatch(positives=tuple(positives), negatives=tuple(negatives))


def _pair_distances(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    if not pairs:
        return np.zeros(0)
    diffs = np.stack([a - b for a, b in pairs])
    return np.linalg.norm(diffs, axis=1)


def contrastive_loss(
    positive_pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    negative_pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    margin: float,
) -> float:
    """Pull aligned embeddings together, push corrupted ones past the margin."""
    pos = _pair_distances(positive_pairs).sum()
    neg = np.maximum(0.0, margin - _pair_distances(negative_pairs)).sum()
    return float(pos + neg)


def loss_from_batch(
    embeddings: Mapping[str, np.ndarray], batch: PairBatch, margin: float
) -> float:
    positive = [(embeddings[s], embeddings[t]) for s, t in batch.positives]
    negative = [(embeddings[s], embeddings[t]) for s, t in batch.negatives]
    return contrastive_loss(positive, negative, margin)


def loss_gradients(
    positive_inputs: Sequence[tuple[np.ndarray, np.ndarray]],
    negative_inputs: Sequence[tuple[np.ndarray, np.ndarray]],
    params: TaeParams,
    margin: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (dL/dW, dL/db) for a batch of concatenated input pairs.

    Each element of the input sequences is (z_a, z_b) with z = [h; f].  A pair
    at exactly zero distance, or a negative pair exactly at the margin, takes
    subgradient zero.  The bias cancels in differences, so dL/db = 0.
    """
    grad_w = np.zeros_like(params.weights)
    grad_b = np.zeros_like(params.bias)

    def accumulate(pairs: Sequence[tuple[np.ndarray, np.ndarray]], sign: float, hinge: bool):
        nonlocal grad_w
        if not pairs:
            return
        deltas = np.stack([za - zb for za, zb in pairs])
        diffs = deltas @ params.weights.T
        dists = np.linalg.norm(diffs, axis=1)
        if not np.isfinite(dists).all():
            raise DivergenceError("non-finite pair distance")
        active = dists > 0
        if hinge:
            active &= dists < margin
        if not active.any():
            return
        units = diffs[active] / dists[active, None]
        grad_w = grad_w + sign * units.T @ deltas[active]

    accumulate(positive_inputs, 1.0, hinge=False)
    accumulate(negative_inputs, -1.0, hinge=True)
    if not np.isfinite(grad_w).all():
        raise DivergenceError("non-finite gradient")
    return grad_w, grad_b


@dataclass
class _AdamState:
    m_w: np.ndarray
    v_w: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, params: TaeParams) -> "_AdamState":
        return cls(
            m_w=np.zeros_like(params.weights),
            v_w=np.zeros_like(params.weights),
            m_b=np.zeros_like(params.bias),
            v_b=np.zeros_like(params.bias),
        )

    def update(
        self, params: TaeParams, grad_w: np.ndarray, grad_b: np.ndarray, lr: float
    ) -> TaeParams:
        self.step += 1
        self.m_w = ADAM_BETA1 * self.m_w + (1 - ADAM_BETA1) * grad_w
        self.v_w = ADAM_BETA2 * self.v_w + (1 - ADAM_BETA2) * grad_w**2
        self.m_b = ADAM_BETA1 * self.m_b + (1 - ADAM_BETA1) * grad_b
        self.v_b = ADAM_BETA2 * self.v_b + (1 - ADAM_BETA2) * grad_b**2
        scale = math.sqrt(1 - ADAM_BETA2**self.step) / (1 - ADAM_BETA1**self.step)
        new_w = params.weights - lr * scale * self.m_w / (np.sqrt(self.v_w) + ADAM_EPSILON)
        new_b = params.bias - lr * scale * self.m_b / (np.sqrt(self.v_b) + ADAM_EPSILON)
        return TaeParams(weights=new_w, bias=new_b, beta=params.beta, dim=params.dim)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    valid_hits1: float


@dataclass
class TrainingLog:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    best_valid_hits1: float = -1.0

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"epoch": e.epoch, "loss": e.loss, "valid_hits1": e.valid_hits1},
                sort_keys=True,
            )
            for e in self.epochs
        ]
        lines.append(
            json.dumps(
                {"best_epoch": self.best_epoch, "best_valid_hits1": self.best_valid_hits1},
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


def train(
    dataset,
    provider: ProviderChain,
    config: TrainConfig,
    use_time_attention: bool = True,
    use_other_attributes: bool = True,
    name_policy: Sequence[str] = DEFAULT_NAME_POLICY,
) -> tuple[TaeParams, TrainingLog]:
    """Fit the combination layer on the train split, early-stopping on
    validation Hits@1, and return the best-validation parameters."""
    alignment = dataset.alignment
    train_links = list(alignment.train_links)
    valid_links = list(alignment.valid_links)
    if not train_links:
        raise DataError("training requires a non-empty train split")
    if not valid_links:
        raise DataError("training requires a non-empty valid split")

    sources = sorted({s for s, _ in train_links} | {s for s, _ in valid_links})
    targets = sorted({t for _, t in train_links} | {t for _, t in valid_links})
    kwargs = dict(
        use_time_attention=use_time_attention,
        use_other_attributes=use_other_attributes,
        name_policy=name_policy,
    )
    source_components = entity_components(dataset.kg1, sources, provider, **kwargs)
    target_components = entity_components(dataset.kg2, targets, provider, **kwargs)
    return _fit(
        source_components, target_components, train_links, valid_links, alignment.links, config
    )


def _fit(
    source_components,
    target_components,
    train_links: list[tuple[str, str]],
    valid_links: list[tuple[str, str]],
    gold_links: Iterable[tuple[str, str]],
    config: TrainConfig,
) -> tuple[TaeParams, TrainingLog]:
    inputs = {
        **assemble_inputs(source_components, config.beta),
        **assemble_inputs(target_components, config.beta),
    }
    dim = next(iter(inputs.values())).shape[0] // 2
    params = TaeParams.initial(dim, config.beta)
    state = _AdamState.zeros(params)
    gold = frozenset(gold_links)
    source_pool = sorted({s for s, _ in train_links})
    target_pool = sorted({t for _, t in train_links})
    valid_gold = dict(valid_links)
    valid_sources = [s for s, _ in valid_links]
    valid_targets = [t for _, t in valid_links]

    log = TrainingLog()
    best_params = params
    epochs_since_improvement = 0
    for epoch in range(1, config.max_epochs + 1):
        # One generator per epoch, reseeded identically: epochs see the same
        # shuffle and negative draws, so a zero learning rate yields a
        # constant loss and runs are reproducible per seed.
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(len(train_links))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch_links = [train_links[i] for i in order[start : start + config.batch_size]]
            batch = sample_negatives(
                batch_links,
                source_pool,
                target_pool,
                config.negatives_per_positive,
                rng,
                gold,
            )
            pos_inputs = [(inputs[s], inputs[t]) for s, t in batch.positives]
            neg_inputs = [(inputs[s], inputs[t]) for s, t in batch.negatives]
            pos_embs = [(apply_params(params, a), apply_params(params, b)) for a, b in pos_inputs]
            neg_embs = [(apply_params(params, a), apply_params(params, b)) for a, b in neg_inputs]
            batch_loss = contrastive_loss(pos_embs, neg_embs, config.margin)
            if not math.isfinite(batch_loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            epoch_loss += batch_loss
            grad_w, grad_b = loss_gradients(pos_inputs, neg_inputs, params, config.margin)
            params = state.update(params, grad_w, grad_b, config.learning_rate)

        src_embs = {s: apply_params(params, inputs[s]) for s in valid_sources}
        tgt_embs = {t: apply_params(params, inputs[t]) for t in valid_targets}
        ranking = retrieve(src_embs, tgt_embs, valid_gold, k=1)
        valid_hits1 = hits_at(ranking.ranks, 1)
        log.epochs.append(EpochStats(epoch=epoch, loss=epoch_loss, valid_hits1=valid_hits1))

        if valid_hits1 > log.best_valid_hits1:
            log.best_valid_hits1 = valid_hits1
            log.best_epoch = epoch
            best_params = params
            epochs_since_improvement = 0
        else:
            epochs_since_improvement += 1
            if epochs_since_improvement >= config.patience:
                break
    return best_params, log


@dataclass(frozen=True)
class GridCell:
    margin: float
    beta: float
    valid_hits1: float


def grid_search(
    dataset,
    provider: ProviderChain,
    config: TrainConfig,
    margins: Sequence[float] = MARGIN_GRID,
    betas: Sequence[float] = BETA_GRID,
    use_time_attention: bool = True,
    use_other_attributes: bool = True,
    name_policy: Sequence[str] = DEFAULT_NAME_POLICY,
) -> tuple[TaeParams, TrainingLog, list[GridCell]]:
    """Train once per (margin, beta) cell and keep the best validation Hits@1."""
    best: tuple[TaeParams, TrainingLog] | None = None
    cells: list[GridCell] = []
    for margin in margins:
        for beta in betas:
            cell_config = replace(config, margin=margin, beta=beta)
            params, log = train(
                dataset,
                provider,
                cell_config,
                use_time_attention=use_time_attention,
                use_other_attributes=use_other_attributes,
                name_policy=name_policy,
            )
            cells.append(GridCell(margin=margin, beta=beta, valid_hits1=log.best_valid_hits1))
            if best is None or log.best_valid_hits1 > best[1].best_valid_hits1:
                best = (params, log)
    assert best is not None
    return best[0], best[1], cells
