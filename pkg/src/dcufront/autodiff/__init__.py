"""Reverse-mode automatic differentiation over numpy arrays."""

from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.gradcheck import GradcheckReport, gradcheck
from dcufront.autodiff.nn import BatchNorm2d, Conv2d, Module
from dcufront.autodiff.tensor import Graph, Tensor, backward, no_grad

__all__ = [
    "BatchNorm2d",
    "ComplexTensor",
    "Conv2d",
    "GradcheckReport",
    "Graph",
    "Module",
    "Tensor",
    "backward",
    "gradcheck",
    "no_grad",
]
