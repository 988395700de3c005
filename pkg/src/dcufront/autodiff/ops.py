"""
Differentiable operations.

Each function computes its forward value with numpy and records a
vector-Jacobian product on the tape through `Tensor.from_op`.
"""
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from dcufront.autodiff.tensor import ArrayLike, Tensor, as_tensor
from dcufront.core.errors import ShapeError

Pair = Union[int, Tuple[int, int]]
Axis = Optional[Union[int, Tuple[int, ...]]]


def _pair(value: Pair) -> Tuple[int, int]:
    return (value, value) if isinstance(value, int) else (int(value[0]), int(value[1]))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def custom(
    inputs: Sequence[Tensor],
    value: np.ndarray,
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
    name: str = "custom",
) -> Tensor:
    """Record a user-supplied forward value and vector-Jacobian product."""
    return Tensor.from_op(np.asarray(value, dtype=np.float64), tuple(inputs), vjp, name)


# Elementwise arithmetic

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor.from_op(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor.from_op(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor.from_op(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor.from_op(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data ** 2), b.shape),
        ),
        "div",
    )


def neg(a: Tensor) -> Tensor:
    return Tensor.from_op(-a.data, (a,), lambda g: (-g,), "neg")


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)
    return Tensor.from_op(a.data * factor, (a,), lambda g: (g * factor,), "scale")


def square(a: Tensor) -> Tensor:
    return Tensor.from_op(a.data ** 2, (a,), lambda g: (2.0 * a.data * g,), "square")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    return Tensor.from_op(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """max(a, floor); the gradient is blocked where the floor is active."""
    active = a.data > floor
    return Tensor.from_op(np.maximum(a.data, floor), (a,), lambda g: (g * active,), "clamp_min")


def relu(a: Tensor) -> Tensor:
    active = a.data > 0
    return Tensor.from_op(a.data * active, (a,), lambda g: (g * active,), "relu")


def leaky_relu(a: Tensor, slope: float = 0.1) -> Tensor:
    factor = np.where(a.data > 0, 1.0, slope)
    return Tensor.from_op(a.data * factor, (a,), lambda g: (g * factor,), "leaky_relu")


def complex_abs(real: Tensor, imag: Tensor) -> Tensor:
    """sqrt(re^2 + im^2) with a zero subgradient at the origin."""
    magnitude = np.sqrt(real.data ** 2 + imag.data ** 2)
    nonzero = magnitude > 0
    safe = np.where(nonzero, magnitude, 1.0)

    def vjp(g):
        scaled = np.where(nonzero, g / safe, 0.0)
        return scaled * real.data, scaled * imag.data

    return Tensor.from_op(magnitude, (real, imag), vjp, "complex_abs")


# Reductions

def _expand_reduced(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape).copy()
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(ax % len(shape) for ax in axes)
    if not keepdims:
        for ax in sorted(axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape).copy()


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return Tensor.from_op(
        a.data.sum(axis=axis, keepdims=keepdims),
        (a,),
        lambda g: (_expand_reduced(g, a.shape, axis, keepdims),),
        "sum",
    )


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    out = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.size / max(np.size(out), 1)
    return Tensor.from_op(
        out,
        (a,),
        lambda g: (_expand_reduced(g, a.shape, axis, keepdims) / count,),
        "mean",
    )


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probs = np.exp(out)
    return Tensor.from_op(
        out,
        (a,),
        lambda g: (g - probs * g.sum(axis=axis, keepdims=True),),
        "log_softmax",
    )


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = np.exp(a.data - a.data.max(axis=axis, keepdims=True))
    probs = shifted / shifted.sum(axis=axis, keepdims=True)
    return Tensor.from_op(
        probs,
        (a,),
        lambda g: (probs * (g - (g * probs).sum(axis=axis, keepdims=True)),),
        "softmax",
    )


# Shape manipulation

def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    return Tensor.from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    inverse = np.argsort(axes)
    return Tensor.from_op(
        a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), "transpose"
    )


def index(a: Tensor, key) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate in the backward pass."""
    def vjp(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, key, g)
        return (grad,)

    return Tensor.from_op(a.data[key], (a,), vjp, "index")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return Tensor.from_op(
        np.concatenate([t.data for t in tensors], axis=axis),
        tensors,
        lambda g: tuple(np.split(g, bounds, axis=axis)),
        "concat",
    )


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    return Tensor.from_op(
        np.stack([t.data for t in tensors], axis=axis),
        tensors,
        lambda g: tuple(np.moveaxis(g, axis, 0)),
        "stack",
    )


def upsample_frames(a: Tensor, factor: int, length: int) -> Tensor:
    """
    Nearest-neighbour upsampling of the last axis by `factor`, cut to `length`.

    Raises:
        ShapeError: the upsampled axis would be shorter than `length`
    """
    frames = a.shape[-1]
    if frames * factor < length:
        raise ShapeError("upsample_frames", (length,), (frames * factor,), "too few frames")

    def vjp(g):
        full = np.zeros(a.shape[:-1] + (frames * factor,))
        full[..., :length] = g
        return (full.reshape(a.shape[:-1] + (frames, factor)).sum(axis=-1),)

    return Tensor.from_op(np.repeat(a.data, factor, axis=-1)[..., :length], (a,), vjp, "upsample")


def linear_along(x: Tensor, weight: ArrayLike, axis: int) -> Tensor:
    """
    Apply the matrix `weight` (out, in) along one axis of `x`.

    Used for the mel filterbank, where the weight is a constant.
    """
    weight = as_tensor(weight)
    moved = np.moveaxis(x.data, axis, -1)
    if moved.shape[-1] != weight.shape[1]:
        raise ShapeError("linear_along", (weight.shape[1],), (moved.shape[-1],), f"axis {axis}")
    out = np.moveaxis(moved @ weight.data.T, -1, axis)

    def vjp(g):
        g_moved = np.moveaxis(g, axis, -1)
        grad_x = np.moveaxis(g_moved @ weight.data, -1, axis)
        grad_w = g_moved.reshape(-1, weight.shape[0]).T @ moved.reshape(-1, weight.shape[1])
        return grad_x, grad_w

    return Tensor.from_op(out, (x, weight), vjp, "linear_along")


# Convolutions

def conv_output_size(size: int, kernel: int, stride: int, padding: int, dilation: int = 1) -> int:
    return (size + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: Pair = 1,
    padding: Pair = 0,
    dilation: Pair = 1,
) -> Tensor:
    """
    2-D cross-correlation.

    Args:
        x: (N, C_in, H, W)
        weight: (C_out, C_in, kh, kw)
        bias: (C_out,) or None

    Returns:
        (N, C_out, H_out, W_out)
    """
    (sh, sw), (ph, pw), (dh, dw) = _pair(stride), _pair(padding), _pair(dilation)
    n, c_in, h, w = x.shape
    c_out, w_in, kh, kw = weight.shape
    if w_in != c_in:
        raise ShapeError("conv2d", (n, w_in, h, w), x.shape, "input channels")
    h_out = conv_output_size(h, kh, sh, ph, dh)
    w_out = conv_output_size(w, kw, sw, pw, dw)
    if h_out <= 0 or w_out <= 0:
        raise ShapeError("conv2d", (kh, kw), (h + 2 * ph, w + 2 * pw), "input smaller than kernel")

    padded = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))

    def window(i: int, j: int) -> Tuple[slice, slice]:
        return (
            slice(i * dh, i * dh + sh * (h_out - 1) + 1, sh),
            slice(j * dw, j * dw + sw * (w_out - 1) + 1, sw),
        )

    out = np.zeros((n, h_out, w_out, c_out))
    for i in range(kh):
        for j in range(kw):
            rows, cols = window(i, j)
            out += np.tensordot(padded[:, :, rows, cols], weight.data[:, :, i, j], axes=([1], [1]))
    out = out.transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    def vjp(g):
        g_t = g.transpose(0, 2, 3, 1)
        grad_padded = np.zeros_like(padded)
        grad_w = np.zeros_like(weight.data)
        for i in range(kh):
            for j in range(kw):
                rows, cols = window(i, j)
                grad_w[:, :, i, j] = np.tensordot(
                    g_t, padded[:, :, rows, cols], axes=([0, 1, 2], [0, 2, 3])
                )
                grad_padded[:, :, rows, cols] += np.tensordot(
                    g_t, weight.data[:, :, i, j], axes=([3], [0])
                ).transpose(0, 3, 1, 2)
        grad_x = grad_padded[:, :, ph:ph + h, pw:pw + w]
        grad_b = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return grad_x, grad_w, grad_b

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out, parents, vjp, "conv2d")


def conv_transpose_output_size(
    size: int, kernel: int, stride: int, padding: int, output_padding: int = 0
) -> int:
    return (size - 1) * stride - 2 * padding + kernel + output_padding


def conv_transpose2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: Pair = 1,
    padding: Pair = 0,
    output_padding: Pair = 0,
) -> Tensor:
    """
    2-D transposed convolution (the adjoint of `conv2d`).

    Args:
        x: (N, C_in, H, W)
        weight: (C_in, C_out, kh, kw)
        output_padding: extra rows/columns added at the far edge

    Returns:
        (N, C_out, (H-1)*s - 2p + k + op, ...)
    """
    (sh, sw), (ph, pw), (oh, ow) = _pair(stride), _pair(padding), _pair(output_padding)
    n, c_in, h, w = x.shape
    w_in, c_out, kh, kw = weight.shape
    if w_in != c_in:
        raise ShapeError("conv_transpose2d", (n, w_in, h, w), x.shape, "input channels")
    h_out = conv_transpose_output_size(h, kh, sh, ph, oh)
    w_out = conv_transpose_output_size(w, kw, sw, pw, ow)
    full_h, full_w = (h - 1) * sh + kh + oh, (w - 1) * sw + kw + ow
    if h_out <= 0 or w_out <= 0:
        raise ShapeError("conv_transpose2d", (1, 1), (h_out, w_out), "empty output")

    x_t = x.data.transpose(0, 2, 3, 1)

    def window(i: int, j: int) -> Tuple[slice, slice]:
        return slice(i, i + sh * (h - 1) + 1, sh), slice(j, j + sw * (w - 1) + 1, sw)

    buffer = np.zeros((n, full_h, full_w, c_out))
    for i in range(kh):
        for j in range(kw):
            rows, cols = window(i, j)
            buffer[:, rows, cols, :] += np.tensordot(x_t, weight.data[:, :, i, j], axes=([3], [0]))
    out = buffer[:, ph:ph + h_out, pw:pw + w_out, :].transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    def vjp(g):
        grad_buffer = np.zeros((n, full_h, full_w, c_out))
        grad_buffer[:, ph:ph + h_out, pw:pw + w_out, :] = g.transpose(0, 2, 3, 1)
        grad_x = np.zeros_like(x_t)
        grad_w = np.zeros_like(weight.data)
        for i in range(kh):
            for j in range(kw):
                rows, cols = window(i, j)
                piece = grad_buffer[:, rows, cols, :]
                grad_x += np.tensordot(piece, weight.data[:, :, i, j], axes=([3], [1]))
                grad_w[:, :, i, j] = np.tensordot(x_t, piece, axes=([0, 1, 2], [0, 1, 2]))
        grad_b = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return grad_x.transpose(0, 3, 1, 2), grad_w, grad_b

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out, parents, vjp, "conv_transpose2d")


# Normalisation

def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """
    Per-channel batch normalisation of (N, C, H, W).

    In training mode the batch statistics are used and the running buffers
    are updated in place (unbiased variance); in eval mode the running
    statistics are used.
    """
    axes = (0, 2, 3)
    count = x.size // x.shape[1]

    def bcast(v: np.ndarray) -> np.ndarray:
        return v[None, :, None, None]

    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        unbiased = var * count / (count - 1) if count > 1 else var
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased
    else:
        mu, var = running_mean, running_var

    std = np.sqrt(var + eps)
    x_hat = (x.data - bcast(mu)) / bcast(std)
    out = bcast(gamma.data) * x_hat + bcast(beta.data)

    def vjp(g):
        grad_gamma = (g * x_hat).sum(axis=axes)
        grad_beta = g.sum(axis=axes)
        g_hat = g * bcast(gamma.data)
        if training:
            grad_x = (
                count * g_hat
                - g_hat.sum(axis=axes, keepdims=True)
                - x_hat * (g_hat * x_hat).sum(axis=axes, keepdims=True)
            ) / (count * bcast(std))
        else:
            grad_x = g_hat / bcast(std)
        return grad_x, grad_gamma, grad_beta

    return Tensor.from_op(out, (x, gamma, beta), vjp, "batch_norm")
