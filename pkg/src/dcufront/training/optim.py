"""Adam over named parameters."""
from collections import OrderedDict
from typing import Collection, Mapping, Tuple

import numpy as np

from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import CheckpointError


class Adam:
    """
    Adam with bias correction and no learning-rate schedule.

    Moments are kept per parameter name so they can be checkpointed.
    Parameters without a gradient, or listed in `frozen`, are left untouched
    and their moments do not advance.
    """

    def __init__(
        self,
        parameters: Mapping[str, Tensor],
        lr: float = 1e-3,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = OrderedDict(parameters)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = OrderedDict((name, np.zeros_like(p.data)) for name, p in self.params.items())
        self.v = OrderedDict((name, np.zeros_like(p.data)) for name, p in self.params.items())
        self.t = 0

    def step(self, frozen: Collection[str] = ()):
        self.t += 1
        for name, p in self.params.items():
            if p.grad is None or name in frozen:
                continue
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * p.grad
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * p.grad ** 2
            m_hat = self.m[name] / (1 - self.beta1 ** self.t)
            v_hat = self.v[name] / (1 - self.beta2 ** self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def state(self) -> "OrderedDict[str, np.ndarray]":
        """Moments as `m.<name>` / `v.<name>` arrays."""
        state: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name in self.params:
            state[f"m.{name}"] = self.m[name].copy()
            state[f"v.{name}"] = self.v[name].copy()
        return state

    def load_state(self, state: Mapping[str, np.ndarray], step: int):
        """
        Raises:
            CheckpointError: moments missing or shaped differently
        """
        for name, p in self.params.items():
            for kind, store in (("m", self.m), ("v", self.v)):
                key = f"{kind}.{name}"
                if key not in state or np.shape(state[key]) != p.data.shape:
                    raise CheckpointError(f"optimizer moment {key} missing or mis-shaped")
                store[name] = np.array(state[key], dtype=np.float64)
        self.t = step
