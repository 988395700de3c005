"""Trainable systems: DCUnet pretraining, baseline, NNFB, cascade and multi-task."""
from dcufront.systems.base import BaseSystem, SystemOutput
from dcufront.systems.baseline import BaselineSystem
from dcufront.systems.batch import Batch, collate
from dcufront.systems.cascade import CascadeSystem
from dcufront.systems.dcunet_system import DcunetSystem
from dcufront.systems.factory import build_system, parse_system_kind
from dcufront.systems.mtl import MtlSystem
from dcufront.systems.nnfb_system import NnfbSystem

__all__ = [
    "BaseSystem",
    "BaselineSystem",
    "Batch",
    "CascadeSystem",
    "DcunetSystem",
    "MtlSystem",
    "NnfbSystem",
    "SystemOutput",
    "build_system",
    "collate",
    "parse_system_kind",
]
