"""Parameter containers and the real-valued layers built on them."""
from collections import OrderedDict
from typing import Iterator, List, Mapping, Optional, Tuple

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.ops import Pair, _pair
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import ParameterMismatchError


def he_normal(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, gain: float = 2.0) -> np.ndarray:
    """Zero-mean normal weights with variance gain / fan_in."""
    return rng.normal(0.0, np.sqrt(gain / max(fan_in, 1)), size=shape)


class Module:
    """
    Hierarchical owner of parameters, buffers and child modules.

    Names are dotted paths (`enc1.conv.weight_real`) built from the
    registration order, so `named_parameters` is deterministic.
    """

    def __init__(self):
        self._parameters: "OrderedDict[str, Tensor]" = OrderedDict()
        self._buffers: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self._modules: "OrderedDict[str, Module]" = OrderedDict()
        self.training = True

    def register_parameter(self, name: str, value: np.ndarray) -> Tensor:
        param = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._parameters[name] = param
        return param

    def register_buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        buffer = np.array(value, dtype=np.float64)
        self._buffers[name] = buffer
        return buffer

    def add_module(self, name: str, module: "Module") -> "Module":
        self._modules[name] = module
        return module

    def children(self) -> Iterator[Tuple[str, "Module"]]:
        return iter(self._modules.items())

    def named_parameters(self, prefix: str = "") -> "OrderedDict[str, Tensor]":
        named: "OrderedDict[str, Tensor]" = OrderedDict()
        for name, param in self._parameters.items():
            named[prefix + name] = param
        for child_name, child in self._modules.items():
            named.update(child.named_parameters(f"{prefix}{child_name}."))
        return named

    def named_buffers(self, prefix: str = "") -> "OrderedDict[str, np.ndarray]":
        named: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, buffer in self._buffers.items():
            named[prefix + name] = buffer
        for child_name, child in self._modules.items():
            named.update(child.named_buffers(f"{prefix}{child_name}."))
        return named

    def parameters(self) -> List[Tensor]:
        return list(self.named_parameters().values())

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Copies of every parameter followed by every buffer."""
        state: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, param in self.named_parameters().items():
            state[name] = param.data.copy()
        for name, buffer in self.named_buffers().items():
            state[name] = buffer.copy()
        return state

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> List[str]:
        """
        Copy values into this module's parameters and buffers.

        Args:
            state: name -> array
            strict: every name on both sides must match

        Returns:
            Names that were loaded

        Raises:
            ParameterMismatchError: shapes differ, or names differ in strict mode
        """
        params = self.named_parameters()
        buffers = self.named_buffers()
        own = {name: p.data.shape for name, p in params.items()}
        own.update({name: b.shape for name, b in buffers.items()})

        missing = [name for name in own if name not in state]
        unexpected = [name for name in state if name not in own]
        mismatched = [
            (name, own[name], tuple(np.shape(value)))
            for name, value in state.items()
            if name in own and tuple(np.shape(value)) != own[name]
        ]
        if mismatched or (strict and (missing or unexpected)):
            raise ParameterMismatchError(
                missing if strict else (), unexpected if strict else (), mismatched
            )

        loaded = []
        for name, value in state.items():
            if name in params:
                params[name].data = np.array(value, dtype=np.float64)
            elif name in buffers:
                buffers[name][...] = value
            else:
                continue
            loaded.append(name)
        return loaded

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for _, child in self.children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self):
        for param in self.parameters():
            param.grad = None

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Conv2d(Module):
    """Real 2-D convolution; `padding=None` pads by half the kernel (same size at stride 1)."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: Pair,
        rng: np.random.Generator,
        stride: Pair = 1,
        padding: Optional[Pair] = None,
        dilation: Pair = 1,
        bias: bool = True,
    ):
        super().__init__()
        self.kernel_size = _pair(kernel_size)
        self.stride = _pair(stride)
        self.dilation = _pair(dilation)
        if padding is None:
            padding = tuple(d * (k // 2) for k, d in zip(self.kernel_size, self.dilation))
        self.padding = _pair(padding)
        kh, kw = self.kernel_size
        self.weight = self.register_parameter(
            "weight", he_normal(rng, (out_channels, in_channels, kh, kw), in_channels * kh * kw)
        )
        self.bias = self.register_parameter("bias", np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.padding, self.dilation)


class BatchNorm2d(Module):
    """Per-channel batch normalisation with running statistics."""

    def __init__(self, num_features: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = self.register_parameter("gamma", np.ones(num_features))
        self.beta = self.register_parameter("beta", np.zeros(num_features))
        self.running_mean = self.register_buffer("running_mean", np.zeros(num_features))
        self.running_var = self.register_buffer("running_var", np.ones(num_features))

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )
