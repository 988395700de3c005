"""Per-bucket frame accuracy and enhancement error on held-out scenes."""
from typing import Dict, List

import numpy as np
from tabulate import tabulate

from dcufront.autodiff.tensor import no_grad
from dcufront.backend.loss import frame_accuracy
from dcufront.core.errors import ConfigError
from dcufront.core.log import get_logger
from dcufront.core.types import Bucket, BucketResult, EvaluationReport
from dcufront.scenes.dataset import SceneDataset
from dcufront.systems.base import BaseSystem
from dcufront.systems.batch import collate

logger = get_logger(__name__)

REPORT_COLUMNS: List[str] = [b.value for b in Bucket] + ["Total"]


def evaluate(
    system: BaseSystem,
    dataset: SceneDataset,
    split: str = "test",
    batch_size: int = 4,
) -> EvaluationReport:
    """
    Evaluate a system in inference mode.

    Frame accuracy is counted per bucket; buckets with no scenes are left
    out of the report. Systems with an enhancement head also get the
    enhancement MSE against the supervision target, next to the MSE of the
    unprocessed mic-1 magnitude.

    Raises:
        ConfigError: the split holds no scenes
    """
    indices = dataset.indices(split)
    if not indices:
        raise ConfigError("paths.scenes", f"no scenes in the {split} split")
    kind = system.get_system_kind()
    system.eval()
    buckets: Dict[Bucket, BucketResult] = {}
    enh_error, raw_error, elements = 0.0, 0.0, 0
    with no_grad():
        for prepared in dataset.batches(split, batch_size, shuffle=False):
            batch = collate(prepared)
            output = system(batch, enhancement=kind.has_enhancement_head)
            if output.log_probs is not None:
                predictions = output.log_probs.data
                for i, bucket in enumerate(batch.buckets):
                    correct, frames = frame_accuracy(predictions[i], batch.labels[i])
                    result = buckets.setdefault(bucket, BucketResult(bucket))
                    buckets[bucket] = result.merge(BucketResult(bucket, 1, frames, correct))
            if output.enhanced is not None:
                magnitude = np.abs(output.enhanced.numpy()[:, 0])
                enh_error += float(np.sum((batch.supervision - magnitude) ** 2))
                raw_error += float(np.sum((batch.supervision - batch.mic1_magnitude) ** 2))
                elements += batch.supervision.size

    report = EvaluationReport(system=kind, buckets=buckets)
    if elements:
        report.enhancement_mse = enh_error / elements
        report.unprocessed_mse = raw_error / elements
    logger.debug("evaluated %d %s scenes: %s", len(indices), split, report.summary())
    return report


def _cell(result: BucketResult) -> str:
    return "-" if result.accuracy is None else f"{result.accuracy * 100:.2f}"


def report_rows(report: EvaluationReport) -> List[List[str]]:
    """Rows of the bucket table: scenes, frames and accuracy per column."""
    results = [report.buckets.get(b, BucketResult(b)) for b in Bucket] + [report.total]
    return [
        ["Scenes"] + [str(r.num_scenes) for r in results],
        ["Frames"] + [str(r.frames) for r in results],
        ["Frame acc (%)"] + [_cell(r) for r in results],
    ]


def format_report(report: EvaluationReport, tablefmt: str = "simple") -> str:
    """Plain-text bucket table with columns Echoed, <5 dB, [5,15) dB, >=15 dB, Total."""
    table = tabulate(report_rows(report), headers=[""] + REPORT_COLUMNS, tablefmt=tablefmt)
    if report.enhancement_mse is None:
        return table
    lines = [
        table,
        "",
        f"Enhancement MSE: {report.enhancement_mse:.6f}",
        f"Unprocessed MSE: {report.unprocessed_mse:.6f}",
    ]
    gain = report.enhancement_gain
    if gain is not None:
        lines.append(f"Relative reduction: {gain * 100:.2f}%")
    return "\n".join(lines)
