"""Complex-to-real channel bridge between the complex encoder and the real back-end."""
from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import ShapeError


def bridge_complex_to_real(x: ComplexTensor) -> Tensor:
    """
    Treat real and imaginary planes as separate channels.

    (N, C, H, W) complex becomes (N, 2C, H, W) real, with channel 2k the
    real plane and channel 2k + 1 the imaginary plane of complex map k.
    """
    n, c, h, w = x.shape
    interleaved = ops.stack([x.real, x.imag], axis=2)
    return ops.reshape(interleaved, (n, 2 * c, h, w))


def unbridge(x: Tensor) -> ComplexTensor:
    """Inverse of `bridge_complex_to_real`."""
    n, c2, h, w = x.shape
    if c2 % 2:
        raise ShapeError("unbridge", (n, c2 + 1, h, w), x.shape, "channel count must be even")
    pairs = ops.reshape(x, (n, c2 // 2, 2, h, w))
    return ComplexTensor(
        ops.index(pairs, (slice(None), slice(None), 0)),
        ops.index(pairs, (slice(None), slice(None), 1)),
    )
