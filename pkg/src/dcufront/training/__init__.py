"""Loss schedule, optimisation, checkpoints, training loops and evaluation."""
from dcufront.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from dcufront.training.evaluate import evaluate, format_report
from dcufront.training.optim import Adam
from dcufront.training.schedule import mtl_loss
from dcufront.training.trainer import (
    Trainer,
    TrainResult,
    evaluate_enhancement_loss,
    init_sweep,
    pretrain_dcunet,
    train,
)

__all__ = [
    "Adam",
    "Checkpoint",
    "TrainResult",
    "Trainer",
    "evaluate",
    "evaluate_enhancement_loss",
    "format_report",
    "init_sweep",
    "load_checkpoint",
    "mtl_loss",
    "pretrain_dcunet",
    "save_checkpoint",
    "train",
]
