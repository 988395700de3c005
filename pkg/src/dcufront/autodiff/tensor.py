"""Dense float64 tensors with a recorded tape and reverse-mode differentiation."""
import contextlib
import contextvars
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from dcufront.core.errors import GraphStateError, ShapeError

VectorJacobian = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]

# Per thread and per async task, so inference can run beside a training step.
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("grad_enabled", default=True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Run forward passes without recording the tape."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """
    N-dimensional array of doubles with an optional gradient accumulator.

    Leaf tensors created with `requires_grad=True` accumulate into `.grad`
    during `backward`. Tensors produced by operations remember their parents
    and a vector-Jacobian product; that record is the tape.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "op", "_parents", "_vjp")
    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.op = "leaf"
        self._parents: Tuple["Tensor", ...] = ()
        self._vjp: Optional[VectorJacobian] = None

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        vjp: VectorJacobian,
        op: str,
    ) -> "Tensor":
        """Create an operation output and record it on the tape if any parent needs gradients."""
        out = cls(data)
        out.op = op
        if is_grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._vjp = vjp
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._vjp is None

    @property
    def parents(self) -> Tuple["Tensor", ...]:
        return self._parents

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None):
        backward([self], [grad])

    def __repr__(self) -> str:
        label = self.name or self.op
        return f"Tensor({label}, shape={self.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the implementations live in `ops`.
    def __add__(self, other):
        from dcufront.autodiff import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from dcufront.autodiff import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from dcufront.autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from dcufront.autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from dcufront.autodiff import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from dcufront.autodiff import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from dcufront.autodiff import ops
        return ops.div(self, other)

    def __neg__(self):
        from dcufront.autodiff import ops
        return ops.neg(self)

    def __getitem__(self, key):
        from dcufront.autodiff import ops
        return ops.index(self, key)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def topological_order(roots: Sequence[Tensor]) -> List[Tensor]:
    """Nodes reachable from `roots` that require gradients, parents before children."""
    order: List[Tensor] = []
    visited = set()
    for root in roots:
        if not root.requires_grad or id(root) in visited:
            continue
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(roots: Sequence[Tensor], grads: Optional[Sequence[Optional[np.ndarray]]] = None):
    """
    Reverse sweep from `roots`, accumulating into leaf `.grad` buffers.

    Args:
        roots: Output tensors to differentiate
        grads: Seed gradients (None means ones, the usual scalar-loss case)
    """
    if grads is None:
        grads = [None] * len(roots)
    pending: Dict[int, np.ndarray] = {}
    for root, seed in zip(roots, grads):
        if not root.requires_grad:
            continue
        seed = np.ones_like(root.data) if seed is None else np.asarray(seed, dtype=np.float64)
        if seed.shape != root.shape:
            raise ShapeError(f"backward seed for {root.name or root.op}", root.shape, seed.shape)
        key = id(root)
        pending[key] = pending[key] + seed if key in pending else seed

    for node in reversed(topological_order(roots)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node._vjp is None:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._vjp(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + parent_grad if key in pending else parent_grad


GraphFn = Callable[[Dict[str, Tensor], Dict[str, Tensor]], Union[Tensor, Dict[str, Tensor]]]


class Graph:
    """
    Named-input, named-output computation with parameters and a tape.

    `fn(inputs, parameters)` builds the outputs; with no `fn` the graph is
    the identity on its inputs.
    """

    def __init__(
        self,
        fn: Optional[GraphFn] = None,
        parameters: Optional[Mapping[str, Tensor]] = None,
        input_shapes: Optional[Mapping[str, Sequence[int]]] = None,
        name: str = "graph",
    ):
        self.fn = fn
        self.parameters: Dict[str, Tensor] = dict(parameters or {})
        self.input_shapes = {k: tuple(v) for k, v in (input_shapes or {}).items()}
        self.name = name
        self.nodes: List[Tensor] = []
        self._outputs: Optional[Dict[str, Tensor]] = None

    def forward(self, inputs: Mapping[str, ArrayLike]) -> Dict[str, Tensor]:
        """
        Run the graph and record its tape.

        Raises:
            ShapeError: a declared input is missing or has the wrong shape
        """
        for key, expected in self.input_shapes.items():
            if key not in inputs:
                raise ShapeError(f"{self.name}.{key}", expected, (), "input missing")
        tensors: Dict[str, Tensor] = {}
        for key, value in inputs.items():
            tensor = value if isinstance(value, Tensor) else Tensor(value, name=key)
            expected = self.input_shapes.get(key)
            if expected is not None and tensor.shape != expected:
                raise ShapeError(f"{self.name}.{key}", expected, tensor.shape)
            tensors[key] = tensor

        outputs = dict(tensors) if self.fn is None else self.fn(tensors, self.parameters)
        if isinstance(outputs, Tensor):
            outputs = {"output": outputs}
        self._outputs = outputs
        self.nodes = topological_order(list(outputs.values()))
        return outputs

    def backward(self, output_gradients: Optional[Mapping[str, Optional[np.ndarray]]] = None):
        """
        Fill parameter gradients from seeds on the named outputs.

        Raises:
            GraphStateError: forward has not been run
        """
        if self._outputs is None:
            raise GraphStateError(f"{self.name}: backward called before forward")
        if output_gradients is None:
            output_gradients = {key: None for key in self._outputs}
        roots, seeds = [], []
        for key, seed in output_gradients.items():
            if key not in self._outputs:
                raise GraphStateError(f"{self.name}: no output named '{key}'")
            roots.append(self._outputs[key])
            seeds.append(seed)
        backward(roots, seeds)

    def zero_grad(self):
        for param in self.parameters.values():
            param.grad = None

    def gradients(self) -> Dict[str, np.ndarray]:
        """Accumulated gradients (zeros for parameters the loss does not reach)."""
        return {
            name: param.grad.copy() if param.grad is not None else np.zeros_like(param.data)
            for name, param in self.parameters.items()
        }
