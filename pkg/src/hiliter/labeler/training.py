"""Cross-entropy training with Adam.

Single-threaded and deterministic by contract: the same seed, data, and
config always produce bit-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from hiliter.dataset import LabeledSentence
from hiliter.labeler.model import LabelerConfig, LabelerModel, labels_to_indices


class TrainError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingParams:
    epochs: int = 3
    learning_rate: float = 0.001
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 42
    # Hook for non-fixed batching experiments: one size per epoch,
    # overriding batch_size. Only the fixed setting is used by default.
    batch_schedule: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.epochs < 0:
            raise TrainError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise TrainError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise TrainError("batch_size must be >= 1")
        if self.batch_schedule is not None and (
            len(self.batch_schedule) < self.epochs
            or any(b < 1 for b in self.batch_schedule)
        ):
            raise TrainError("batch_schedule needs a size >= 1 for every epoch")

    def batch_size_for_epoch(self, epoch: int) -> int:
        if self.batch_schedule is not None:
            return self.batch_schedule[epoch]
        return self.batch_size


@dataclass
class TrainingLog:
    epoch_losses: list[float] = field(default_factory=list)
    n_sentences: int = 0
    n_tokens: int = 0
    warnings: list[str] = field(default_factory=list)


def _repair_cut(labels: list[str]) -> list[str]:
    """Fix the labels of a hard-split chunk so runs stay valid."""
    if labels and labels[0][0] in "IE":
        labels[0] = "B" + labels[0][1:]
    if labels and labels[-1][0] == "I":
        labels[-1] = "E" + labels[-1][1:]
    return labels


def _prepare(
    train_set: Sequence[LabeledSentence], config: LabelerConfig, log: TrainingLog
) -> list[tuple[list[str], np.ndarray]]:
    fmt = config.format
    prepared = []
    for sent in train_set:
        if sent.format is not fmt:
            raise TrainError(
                f"sentence for {sent.format.value} in a {fmt.value} training set"
            )
        tokens = list(sent.tokens)
        labels = list(sent.labels)
        if len(tokens) > config.max_tokens:
            log.warnings.append(
                f"sentence with {len(tokens)} tokens hard-split at {config.max_tokens}"
            )
        while tokens:
            chunk_tokens = tokens[: config.max_tokens]
            chunk_labels = _repair_cut(labels[: config.max_tokens])
            prepared.append((chunk_tokens, labels_to_indices(chunk_labels)))
            tokens = tokens[config.max_tokens :]
            labels = labels[config.max_tokens :]
    return prepared


class AdamOptimizer:
    def __init__(self, params: dict[str, np.ndarray], hp: TrainingParams):
        self.hp = hp
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        hp = self.hp
        self.t += 1
        bias1 = 1.0 - hp.beta1**self.t
        bias2 = 1.0 - hp.beta2**self.t
        for k, g in grads.items():
            self.m[k] = hp.beta1 * self.m[k] + (1.0 - hp.beta1) * g
            self.v[k] = hp.beta2 * self.v[k] + (1.0 - hp.beta2) * (g * g)
            m_hat = self.m[k] / bias1
            v_hat = self.v[k] / bias2
            params[k] -= hp.learning_rate * m_hat / (np.sqrt(v_hat) + hp.epsilon)


def train(
    train_set: Sequence[LabeledSentence],
    config: LabelerConfig,
    params: TrainingParams | None = None,
) -> tuple[LabelerModel, TrainingLog]:
    """Train a fresh model; returns the model and its per-epoch loss log.

    Each epoch reshuffles with the seeded generator, batches are
    ``batch_size`` sentences, and the loss is token-level cross-entropy
    averaged over the batch's tokens.
    """
    if not train_set:
        raise TrainError("empty training set")
    hp = params or TrainingParams()
    log = TrainingLog()
    prepared = _prepare(train_set, config, log)
    log.n_sentences = len(prepared)
    log.n_tokens = sum(len(t) for t, _ in prepared)

    model = LabelerModel.initialize(config)
    encoded = [
        (model.encode_tokens(tokens), y, len(tokens)) for tokens, y in prepared
    ]
    optimizer = AdamOptimizer(model.params, hp)
    rng = np.random.default_rng(hp.seed)
    n = len(encoded)
    for epoch in range(hp.epochs):
        order = rng.permutation(n)
        epoch_nll = 0.0
        epoch_tokens = 0
        batch_size = hp.batch_size_for_epoch(epoch)
        for b0 in range(0, n, batch_size):
            batch = [encoded[i] for i in order[b0 : b0 + batch_size]]
            batch_tokens = sum(ln for _, _, ln in batch)
            grads = {k: np.zeros_like(v) for k, v in model.params.items()}
            batch_nll = 0.0
            for idx, y, ln in batch:
                probs, cache = model.forward_cached(idx)
                gold_p = probs[np.arange(ln), y]
                batch_nll += float(-np.log(np.maximum(gold_p, 1e-300)).sum())
                dlogits = probs.copy()
                dlogits[np.arange(ln), y] -= 1.0
                dlogits /= batch_tokens
                model.backward(idx, cache, dlogits, grads)
            if not np.isfinite(batch_nll):
                raise TrainError(
                    f"non-finite loss in epoch {epoch}, batch {b0 // batch_size}"
                )
            optimizer.step(model.params, grads)
            epoch_nll += batch_nll
            epoch_tokens += batch_tokens
        log.epoch_losses.append(epoch_nll / max(epoch_tokens, 1))
    model._inference_params = None
    return model, log
