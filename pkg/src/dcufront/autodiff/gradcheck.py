"""Finite-difference verification of analytic gradients."""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from dcufront.autodiff.tensor import ArrayLike, Graph, Tensor, backward
from dcufront.core.errors import GradcheckError, GraphStateError
from dcufront.core.log import get_logger

logger = get_logger(__name__)


@dataclass
class GradcheckReport:
    """Worst relative error per parameter."""
    errors: Dict[str, float]
    tolerance: float
    entries_checked: Dict[str, int] = field(default_factory=dict)

    @property
    def failures(self) -> Dict[str, float]:
        return {name: err for name, err in self.errors.items() if not err <= self.tolerance}

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def summary(self) -> str:
        status = "ok" if self.passed else f"{len(self.failures)} failing"
        return f"{len(self.errors)} parameters, max rel. error {self.max_error:.2e} ({status})"


def _loss_value(outputs: Mapping[str, Tensor], loss_key: Optional[str]) -> Tensor:
    if loss_key is not None:
        return outputs[loss_key]
    if len(outputs) != 1:
        raise GraphStateError(f"graph has outputs {sorted(outputs)}; name the loss with loss_key")
    return next(iter(outputs.values()))


def gradcheck(
    graph: Graph,
    inputs: Mapping[str, ArrayLike],
    tolerance: float = 1e-4,
    step: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
    loss_key: Optional[str] = None,
    scale_floor: float = 1e-6,
) -> GradcheckReport:
    """
    Compare backward-pass gradients with central differences.

    The loss is the sum of the chosen output. For each parameter the error
    is max|analytic - numeric| / max(max|numeric|, scale_floor), so a
    gradient off by a factor of two scores about 1.

    Args:
        graph: Graph whose parameters are checked
        inputs: Graph inputs, held fixed
        tolerance: Largest acceptable relative error
        step: Finite-difference step
        max_entries: Probe at most this many entries per parameter (sampled)
        seed: Seed for the entry sampling
        loss_key: Output to differentiate (required when there are several)
        scale_floor: Lower bound on the error denominator

    Returns:
        GradcheckReport

    Raises:
        GradcheckError: a perturbed forward pass gave a non-finite loss
    """
    graph.zero_grad()
    loss = _loss_value(graph.forward(inputs), loss_key)
    backward([loss], [np.ones_like(loss.data)])
    analytic = graph.gradients()

    def evaluate() -> float:
        return float(_loss_value(graph.forward(inputs), loss_key).data.sum())

    rng = np.random.default_rng(seed)
    errors: Dict[str, float] = {}
    checked: Dict[str, int] = {}
    for name, param in graph.parameters.items():
        flat = np.arange(param.size)
        if max_entries is not None and param.size > max_entries:
            flat = np.sort(rng.choice(param.size, size=max_entries, replace=False))
        worst_diff, scale = 0.0, 0.0
        for flat_index in flat:
            idx = np.unravel_index(int(flat_index), param.shape)
            original = param.data[idx]
            param.data[idx] = original + step
            plus = evaluate()
            param.data[idx] = original - step
            minus = evaluate()
            param.data[idx] = original
            for value in (plus, minus):
                if not np.isfinite(value):
                    raise GradcheckError(name, tuple(int(i) for i in idx), value)
            numeric = (plus - minus) / (2.0 * step)
            worst_diff = max(worst_diff, abs(analytic[name][idx] - numeric))
            scale = max(scale, abs(numeric))
        errors[name] = worst_diff / max(scale, scale_floor)
        checked[name] = len(flat)
        logger.debug("gradcheck %s: %d entries, rel. error %.3e", name, len(flat), errors[name])

    graph.zero_grad()
    return GradcheckReport(errors, tolerance, checked)
