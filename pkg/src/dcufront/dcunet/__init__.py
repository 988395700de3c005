"""Multi-channel Deep Complex U-Net enhancement model."""
from dcufront.dcunet.layers import (
    ComplexBatchNorm2d,
    ComplexConv2d,
    ComplexConvTranspose2d,
    complex_conv2d,
    multichannel_input_layer,
)
from dcufront.dcunet.loss import enhancement_loss
from dcufront.dcunet.model import DcunetConfig, DcunetModel, dcunet_forward

__all__ = [
    "ComplexBatchNorm2d",
    "ComplexConv2d",
    "ComplexConvTranspose2d",
    "DcunetConfig",
    "DcunetModel",
    "complex_conv2d",
    "dcunet_forward",
    "enhancement_loss",
    "multichannel_input_layer",
]
