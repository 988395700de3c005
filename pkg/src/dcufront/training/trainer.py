"""Training loops for every system, DCUnet pretraining and the initialisation sweep."""
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from dcufront.autodiff.tensor import Tensor, no_grad
from dcufront.backend.loss import ce_proxy_loss, frame_accuracy
from dcufront.core.errors import ConfigError, NonFiniteLossError
from dcufront.core.log import get_logger
from dcufront.core.types import EpochMetrics, SystemKind, TrainSchedule
from dcufront.dcunet.loss import enhancement_loss
from dcufront.scenes.dataset import SceneDataset
from dcufront.systems.base import BaseSystem, SystemOutput
from dcufront.systems.batch import Batch, collate
from dcufront.training.checkpoint import Checkpoint, save_checkpoint
from dcufront.training.optim import Adam
from dcufront.training.schedule import mtl_loss

logger = get_logger(__name__)

PathLike = Union[str, Path]


@dataclass
class StepLosses:
    total: Tensor
    l_asr: Optional[Tensor]
    l_enh: Optional[Tensor]


@dataclass
class TrainResult:
    """Outcome of one training run."""
    system: BaseSystem
    checkpoint: Checkpoint
    metrics: List[EpochMetrics] = field(default_factory=list)
    initial_l_enh: Optional[float] = None
    final_l_enh: Optional[float] = None


def step_losses(
    system: BaseSystem,
    output: SystemOutput,
    batch: Batch,
    epoch: int,
    schedule: TrainSchedule,
) -> StepLosses:
    """
    Loss to optimise for one batch.

    DCUnet pretraining optimises L_enh; baseline, NNFB and cascade optimise
    L_asr (the cascade still reports L_enh); MTL mixes both while the
    enhancement task is active.
    """
    kind = system.get_system_kind()
    l_asr = ce_proxy_loss(output.log_probs, batch.labels) if output.log_probs is not None else None
    l_enh = enhancement_loss(output.enhanced, batch.supervision) if output.enhanced is not None else None
    if kind is SystemKind.DCUNET:
        return StepLosses(l_enh, None, l_enh)
    if kind is SystemKind.MTL and l_enh is not None:
        return StepLosses(mtl_loss(l_asr, l_enh, epoch, schedule), l_asr, l_enh)
    return StepLosses(l_asr, l_asr, l_enh)


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def evaluate_enhancement_loss(
    system: BaseSystem,
    dataset: SceneDataset,
    split: str = "train",
    batch_size: int = 4,
) -> Optional[float]:
    """
    Eval-mode L_enh over a split in index order, weighted by element count.

    None for systems without an enhancement head or an empty split.
    """
    if not system.get_system_kind().has_enhancement_head:
        return None
    system.eval()
    total, count = 0.0, 0
    with no_grad():
        for prepared in dataset.batches(split, batch_size, shuffle=False):
            batch = collate(prepared)
            output = system(batch, enhancement=True)
            loss = enhancement_loss(output.enhanced, batch.supervision).item()
            elements = batch.supervision.size
            total += loss * elements
            count += elements
    return total / count if count else None


def evaluate_frame_accuracy(
    system: BaseSystem,
    dataset: SceneDataset,
    split: str = "test",
    batch_size: int = 4,
) -> Optional[float]:
    if not system.get_system_kind().has_recognition_head:
        return None
    system.eval()
    correct, frames = 0, 0
    with no_grad():
        for prepared in dataset.batches(split, batch_size, shuffle=False):
            batch = collate(prepared)
            output = system(batch, enhancement=False)
            c, n = frame_accuracy(output.log_probs.data, batch.labels)
            correct += c
            frames += n
    return correct / frames if frames else None


class Trainer:
    """
    Epoch loop over a SceneDataset.

    Batches arrive in a seed-fixed order, dropout draws from a generator
    seeded by (seed, epoch), and a checkpoint is written after every epoch,
    so a non-finite loss leaves the last good epoch on disk.

    Example:
        >>> trainer = Trainer(system, dataset, schedule, checkpoint_path="mtl.ckpt")
        >>> result = trainer.train()
    """

    def __init__(
        self,
        system: BaseSystem,
        dataset: SceneDataset,
        schedule: TrainSchedule,
        config_digest: str = "",
        checkpoint_path: Optional[PathLike] = None,
        metrics_path: Optional[PathLike] = None,
        extra_metadata: Optional[Dict] = None,
    ):
        schedule.validate()
        self.system = system
        self.dataset = dataset
        self.schedule = schedule
        self.config_digest = config_digest
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.metrics_path = Path(metrics_path) if metrics_path else None
        self.extra_metadata = dict(extra_metadata or {})
        self.kind = system.get_system_kind()
        self.optimizer = Adam(
            system.checkpoint_module().named_parameters(),
            lr=schedule.learning_rate,
            betas=schedule.adam_betas,
            eps=schedule.adam_eps,
        )
        self.decoder_names = set(system.decoder_parameter_names())
        self.last_good: Optional[str] = None

    def enhancement_active(self, epoch: int) -> bool:
        if self.kind is SystemKind.MTL:
            return self.schedule.enhancement_active(epoch)
        return self.kind.has_enhancement_head

    def frozen(self, epoch: int) -> Tuple[str, ...]:
        """Decoder parameters stop updating once the MTL enhancement task is switched off."""
        if self.kind is SystemKind.MTL and not self.schedule.enhancement_active(epoch):
            return tuple(self.decoder_names)
        return ()

    def checkpoint(self, epoch: int, metadata: Optional[Dict] = None) -> Checkpoint:
        meta = {
            "system": self.kind.value,
            "config_digest": self.config_digest,
            "seed": self.schedule.seed,
            "epoch": epoch,
            "adam_step": self.optimizer.t,
        }
        meta.update(self.extra_metadata)
        meta.update(metadata or {})
        return Checkpoint(
            state=self.system.checkpoint_module().state_dict(),
            metadata=meta,
            moments=self.optimizer.state(),
        )

    def run_epoch(self, epoch: int) -> Tuple[Optional[float], Optional[float]]:
        """One pass over the training split; returns mean (L_asr, L_enh)."""
        self.system.train()
        enhancement = self.enhancement_active(epoch)
        frozen = self.frozen(epoch)
        rng = np.random.default_rng([self.schedule.seed, epoch])
        asr_values: List[float] = []
        enh_values: List[float] = []
        for step, prepared in enumerate(
            self.dataset.batches("train", self.schedule.batch_size, epoch, self.schedule.seed)
        ):
            batch = collate(prepared)
            self.optimizer.zero_grad()
            output = self.system(batch, enhancement=enhancement, rng=rng)
            losses = step_losses(self.system, output, batch, epoch, self.schedule)
            value = losses.total.item()
            if not math.isfinite(value):
                logger.error("non-finite loss at epoch %d step %d", epoch, step)
                raise NonFiniteLossError(epoch, step, self.last_good)
            losses.total.backward()
            self.optimizer.step(frozen)
            if losses.l_asr is not None:
                asr_values.append(losses.l_asr.item())
            if losses.l_enh is not None:
                enh_values.append(losses.l_enh.item())
        return _mean(asr_values), _mean(enh_values)

    def log_metrics(self, metrics: EpochMetrics):
        logger.info(
            "%s epoch %d: L_asr=%s L_enh=%s frame_acc=%s",
            metrics.system, metrics.epoch,
            _fmt(metrics.l_asr), _fmt(metrics.l_enh), _fmt(metrics.frame_acc),
        )
        if self.metrics_path is not None:
            self.metrics_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.metrics_path, "a") as f:
                f.write(metrics.to_log_line() + "\n")

    def train(self) -> TrainResult:
        """
        Run every epoch of the schedule.

        Raises:
            NonFiniteLossError: a batch loss is NaN or infinite
        """
        result = TrainResult(self.system, self.checkpoint(0))
        if self.kind.has_enhancement_head:
            result.initial_l_enh = evaluate_enhancement_loss(
                self.system, self.dataset, "train", self.schedule.batch_size
            )
        for epoch in range(1, self.schedule.epochs + 1):
            l_asr, l_enh = self.run_epoch(epoch)
            accuracy = evaluate_frame_accuracy(self.system, self.dataset, "test", self.schedule.batch_size)
            metrics = EpochMetrics(epoch, self.kind.value, l_asr, l_enh, accuracy)
            result.metrics.append(metrics)
            self.log_metrics(metrics)
            if self.checkpoint_path is not None:
                save_checkpoint(self.checkpoint_path, self.checkpoint(epoch))
                self.last_good = str(self.checkpoint_path)

        if self.kind.has_enhancement_head:
            result.final_l_enh = evaluate_enhancement_loss(
                self.system, self.dataset, "train", self.schedule.batch_size
            )
        extra = {} if result.final_l_enh is None else {"final_l_enh": result.final_l_enh}
        result.checkpoint = self.checkpoint(self.schedule.epochs, extra)
        if self.checkpoint_path is not None:
            save_checkpoint(self.checkpoint_path, result.checkpoint)
        return result


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def train(
    system: BaseSystem,
    dataset: SceneDataset,
    schedule: TrainSchedule,
    **kwargs,
) -> TrainResult:
    """Train `system` on the training split; see Trainer for keyword arguments."""
    return Trainer(system, dataset, schedule, **kwargs).train()


def pretrain_dcunet(
    system: BaseSystem,
    dataset: SceneDataset,
    schedule: TrainSchedule,
    **kwargs,
) -> TrainResult:
    """
    Train a stand-alone DCUnet on the enhancement loss.

    The returned checkpoint records the final eval-mode L_enh over the
    training split as `final_l_enh`.
    """
    if system.get_system_kind() is not SystemKind.DCUNET:
        raise ConfigError("system", f"pretraining needs a DCUnet system, got {system.get_system_kind().value}")
    return Trainer(system, dataset, schedule, **kwargs).train()


def init_sweep(
    build,
    dataset: SceneDataset,
    schedule: TrainSchedule,
    pretrained: Checkpoint,
    epochs: int = 3,
) -> Dict[str, Optional[float]]:
    """
    Train the same system from random and from pretrained DCUnet initialisation.

    Args:
        build: Zero-argument callable returning a fresh system (same seed each call)
        pretrained: DCUnet checkpoint used for the second run
        epochs: Epochs per run; the reported value is L_asr of the last one

    Returns:
        {"random": L_asr, "pretrained": L_asr}
    """
    short = replace(schedule, epochs=epochs)
    outcome: Dict[str, Optional[float]] = {}
    for label in ("random", "pretrained"):
        system = build()
        if label == "pretrained":
            system.init_from(pretrained.state)
        metrics = train(system, dataset, short).metrics
        outcome[label] = metrics[-1].l_asr if metrics else None
    logger.info(
        "init sweep after %d epochs: random L_asr=%s, pretrained L_asr=%s",
        epochs, _fmt(outcome["random"]), _fmt(outcome["pretrained"]),
    )
    return outcome
