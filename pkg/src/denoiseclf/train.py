"""Two-phase training: reconstruction pre-training, then end-to-end
classification fine-tuning with a linear warmup/decay schedule.

Phase 1 freezes the encoder, caches the (incomplete, complete) embedding
pairs once, and optimizes only the denoising stacks under MSE. Phase 2
unfreezes everything and minimizes cross-entropy on the incomplete
sentences, optionally keeping the reconstruction MSE as an auxiliary term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .denoise import denoise_loss
from .metrics import ConfusionMatrix, DataError
from .model import TextClassifier
from .tensor import Adam, Tensor


@dataclass(frozen=True)
class TrainConfig:
    phase1_epochs: int = 500
    phase1_lr: float = 1e-3
    weight_decay: float = 1e-5
    phase2_epochs: int = 3
    phase2_lr: float = 2e-5
    warmup_proportion: float = 0.1
    batch_size: int = 8
    seed: int = 0
    aux_mse_weight: float = 0.0  # keep reconstruction loss during phase 2
    include_complete_phase2: bool = False  # also train on complete sentences

    def __post_init__(self):
        if self.phase1_epochs <= 0 or self.phase2_epochs <= 0:
            raise ValueError("epoch counts must be positive")
        if not 0.0 <= self.warmup_proportion <= 1.0:
            raise ValueError("warmup proportion must lie in [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def warmup_linear(step: int, total_steps: int, warmup_proportion: float) -> float:
    """Piecewise-linear schedule factor: 0 -> 1 over the warmup steps, then
    1 -> 0 over the remainder. Continuous, peaks exactly once."""
    if total_steps <= 0:
        return 0.0
    w = max(1, math.ceil(warmup_proportion * total_steps))
    if step <= w:
        return step / w
    if total_steps == w:
        return 1.0
    return max(0.0, (total_steps - step) / (total_steps - w))


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _require_pairs(pairs) -> None:
    for i, ex in enumerate(pairs):
        if ex.complete is None:
            raise DataError(
                f"example {i} has no complete sentence; phase 1 needs pairs")


def cache_embeddings(pairs, model: TextClassifier) -> list[tuple[Tensor, Tensor]]:
    """Detached (h_inc, h_comp) per pair; valid while the encoder is frozen."""
    cached = []
    for ex in pairs:
        h_inc = model.intermediate(model.encode_sentence(ex.incomplete))
        h_comp = model.intermediate(model.encode_sentence(ex.complete))
        cached.append((h_inc.detach(), h_comp.detach()))
    return cached


def train_phase1(pairs, model: TextClassifier, cfg: TrainConfig,
                 log=None) -> list[float]:
    """Train only the denoising stacks; returns the per-epoch mean MSE."""
    if not pairs:
        raise DataError("phase 1 needs a non-empty paired corpus")
    _require_pairs(pairs)
    cached = cache_embeddings(pairs, model)
    params = model.denoise_parameters()
    for p in params:
        p.requires_grad = True
    opt = Adam(params, lr=cfg.phase1_lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(cfg.seed)
    curve = []
    for epoch in range(cfg.phase1_epochs):
        epoch_loss, count = 0.0, 0
        for batch in _batches(len(cached), cfg.batch_size, rng):
            losses = None
            for i in batch:
                h_inc, h_comp = cached[i]
                rec = model.stack(h_inc)
                loss = denoise_loss(rec, h_comp)
                losses = loss if losses is None else losses + loss
            loss = T.mul(losses, Tensor(1.0 / len(batch)))
            epoch_loss += float(loss.values) * len(batch)
            count += len(batch)
            if cfg.phase1_lr > 0:
                loss.backward()
                opt.step()
        curve.append(epoch_loss / count)
        if log is not None:
            log({"phase": 1, "epoch": epoch, "loss": curve[-1],
                 "lr": cfg.phase1_lr})
    return curve


def train_phase2(data, model: TextClassifier, cfg: TrainConfig,
                 log=None) -> list[dict]:
    """End-to-end fine-tuning on the classification objective."""
    if not data:
        raise DataError("phase 2 needs a non-empty corpus")
    examples = list(data)
    if cfg.include_complete_phase2:
        from .data import PairedExample
        examples += [PairedExample(ex.label, ex.complete, None)
                     for ex in data if ex.complete is not None]
    params = model.trainable_parameters()
    for p in params:
        p.requires_grad = True
    opt = Adam(params, lr=0.0, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(cfg.seed + 1)
    total_steps = cfg.phase2_epochs * math.ceil(len(examples) / cfg.batch_size)
    use_aux = (cfg.aux_mse_weight > 0 and model.config.mode == "stacked")
    history = []
    step = 0
    for epoch in range(cfg.phase2_epochs):
        epoch_loss, count = 0.0, 0
        for batch in _batches(len(examples), cfg.batch_size, rng):
            step += 1
            lr = cfg.phase2_lr * warmup_linear(step, total_steps,
                                               cfg.warmup_proportion)
            loss = None
            for i in batch:
                ex = examples[i]
                seq = model.encode_sentence(ex.incomplete)
                logits = model.logits(seq)
                item = T.cross_entropy(logits, [ex.label])
                if use_aux and ex.complete is not None:
                    h_inc = model.intermediate(seq)
                    h_comp = model.intermediate(
                        model.encode_sentence(ex.complete)).detach()
                    aux = denoise_loss(model.stack(h_inc), h_comp)
                    item = item + T.mul(aux, Tensor(cfg.aux_mse_weight))
                loss = item if loss is None else loss + item
            loss = T.mul(loss, Tensor(1.0 / len(batch)))
            epoch_loss += float(loss.values) * len(batch)
            count += len(batch)
            loss.backward()
            opt.lr = lr
            opt.step()
        history.append({"phase": 2, "epoch": epoch,
                        "loss": epoch_loss / count, "lr": lr})
        if log is not None:
            log(history[-1])
    return history


def evaluate(test, model: TextClassifier) -> ConfusionMatrix:
    """Accumulate predictions over the incomplete sentences only."""
    examples = list(test)
    if not examples:
        raise DataError("cannot evaluate on an empty test set")
    cm = ConfusionMatrix(model.config.encoder.num_classes)
    for ex in examples:
        _, label = model.predict_sentence(ex.incomplete)
        cm.add(ex.label, label)
    return cm
