# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""End-to-end training loop.

Each step draws one minibatch, splits it into micro-batches of
``cfg.micro_batch`` samples, records each on its own tape (optionally on
a thread pool), and sums the weighted micro-batch gradients before a
single Adam update. With ``cfg.deterministic`` the sum runs in batch
order, so the result does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from visforce.config import TrainConfig
from visforce.data.recording import RecordingSet
from visforce.errors import ContractViolation, NumericalError, ShapeError
from visforce.models.network import ForceEstimator, ModelSpec
from visforce.tensor import Tape, Tensor, gradients, save_checkpoint
from visforce.tensor import ops
from visforce.tracking import track_epoch, track_training_run
from visforce.training.optim import AdamState, adam_step, lr_at
from visforce.training.sampler import Batch, sample_minibatch

logger = logging.getLogger(__name__)

LOSS_LOG = "loss.csv"
CHECKPOINT = "model.ckpt"


def loss(pred: Tensor, target: Union[Tensor, Sequence[float], np.ndarray]) -> Tensor:
    """Mean squared error over the batch."""
    target_t = target if isinstance(target, Tensor) else Tensor(np.asarray(target, dtype=np.float64))
    if pred.shape != target_t.shape:
        raise ShapeError(f"prediction shape {pred.shape} does not match target shape {target_t.shape}")
    return ops.mean(ops.square(ops.sub(pred, target_t)))


def batch_gradients(model: ForceEstimator, batch: Batch) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss and parameter gradients for one (micro-)batch."""
    with Tape() as tape:
        value = loss(model(Tensor(batch.frames)), batch.targets)
    grads, _ = gradients(tape, value)
    return value.item(), grads


@dataclass
class TrainResult:
    model: ForceEstimator
    checkpoint_path: Optional[Path]
    loss_log_path: Optional[Path]
    losses: List[float] = field(default_factory=list)
    steps: int = 0


class Trainer:
    """Owns the model, optimizer state and output files of one run."""

    def __init__(
        self,
        cfg: TrainConfig,
        dataset: Sequence[RecordingSet],
        output_dir: Optional[Union[str, Path]] = None,
        steps_per_epoch: Optional[int] = None,
    ) -> None:
        self.cfg = cfg.validate()
        if not dataset:
            raise ContractViolation("training needs a non-empty dataset")
        self.dataset = list(dataset)
        self.model = ForceEstimator.init(ModelSpec.from_config(cfg), cfg.seed)
        self.state = AdamState.for_parameters(self.model.parameters())
        self.rng = np.random.default_rng([cfg.seed, 1])
        total_frames = sum(len(s) for s in self.dataset)
        self.steps_per_epoch = steps_per_epoch or max(1, math.ceil(total_frames / cfg.batch_size))
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.step = 0

    @property
    def checkpoint_path(self) -> Optional[Path]:
        return self.output_dir / CHECKPOINT if self.output_dir else None

    @property
    def loss_log_path(self) -> Optional[Path]:
        return self.output_dir / LOSS_LOG if self.output_dir else None

    def _save(self, epoch: int) -> None:
        if self.checkpoint_path is None:
            return
        ckpt = self.model.to_checkpoint(epoch=epoch, seed=self.cfg.seed, step=self.step)
        save_checkpoint(self.checkpoint_path, ckpt)

    def compute_gradients(self, batch: Batch) -> Tuple[float, Dict[str, np.ndarray]]:
        chunks = batch.chunks(self.cfg.micro_batch)
        total = len(batch)
        value = 0.0
        summed = {p.name: np.zeros(p.shape) for p in self.model.parameters()}

        def accumulate(chunk: Batch, chunk_loss: float, grads: Dict[str, np.ndarray]) -> None:
            nonlocal value
            weight = len(chunk) / total
            value += weight * chunk_loss
            for name, g in grads.items():
                summed[name] += weight * g

        if self.cfg.workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                if self.cfg.deterministic:
                    for chunk, result in zip(chunks, pool.map(lambda c: batch_gradients(self.model, c), chunks)):
                        accumulate(chunk, *result)
                else:
                    # Completion order: the float sums may differ in the last bits between runs.
                    pending = {pool.submit(batch_gradients, self.model, c): c for c in chunks}
                    for future in as_completed(pending):
                        accumulate(pending[future], *future.result())
        else:
            for chunk in chunks:
                accumulate(chunk, *batch_gradients(self.model, chunk))
        return value, summed

    def train_step(self, lr: float) -> float:
        batch = sample_minibatch(self.dataset, self.cfg, self.rng, context=self.model.context_frames)
        value, grads = self.compute_gradients(batch)
        if not math.isfinite(value):
            raise NumericalError(f"non-finite loss {value!r} at step {self.step}")
        adam_step(self.model.parameters(), grads, self.state, lr)
        self.step += 1
        return value

    def run(self) -> TrainResult:
        cfg = self.cfg
        losses: List[float] = []
        log_fh = None
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            log_fh = self.loss_log_path.open("w", newline="", encoding="utf-8")
        try:
            writer = csv.writer(log_fh) if log_fh else None
            if writer:
                writer.writerow(["epoch", "step", "lr", "loss"])
            self._save(epoch=0)
            with track_training_run(cfg) as run:
                for epoch in range(cfg.epochs):
                    lr = lr_at(epoch, cfg)
                    with track_epoch(epoch, lr) as ep:
                        epoch_losses = []
                        for _ in range(self.steps_per_epoch):
                            value = self.train_step(lr)
                            epoch_losses.append(value)
                            losses.append(value)
                            if writer:
                                writer.writerow([epoch, self.step, repr(lr), repr(value)])
                        mean_loss = float(np.mean(epoch_losses))
                        ep.set_result(loss=mean_loss, steps=len(epoch_losses))
                    self._save(epoch=epoch + 1)
                    if log_fh:
                        log_fh.flush()
                    logger.info("epoch %d/%d lr=%.3g loss=%.6f", epoch + 1, cfg.epochs, lr, mean_loss)
                run.set_result(steps=self.step, final_loss=losses[-1] if losses else None)
        except NumericalError:
            logger.error("Training aborted at step %d; last good checkpoint kept at %s", self.step, self.checkpoint_path)
            raise
        finally:
            if log_fh:
                log_fh.close()
        return TrainResult(
            model=self.model,
            checkpoint_path=self.checkpoint_path,
            loss_log_path=self.loss_log_path,
            losses=losses,
            steps=self.step,
        )


def train(
    cfg: TrainConfig,
    dataset: Sequence[RecordingSet],
    output_dir: Optional[Union[str, Path]] = None,
    steps_per_epoch: Optional[int] = None,
) -> TrainResult:
    """Train ``cfg.model_variant`` from scratch on ``dataset``.

    Writes ``model.ckpt`` after initialization and after every epoch, and
    ``loss.csv`` (``epoch,step,lr,loss``) when ``output_dir`` is given.
    """
    return Trainer(cfg, dataset, output_dir, steps_per_epoch).run()
