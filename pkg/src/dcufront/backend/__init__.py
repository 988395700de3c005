"""Recognition back-end: acoustic model, complex bridge, dropout and loss."""
from dcufront.backend.acoustic_model import BackendConfig, BackendModel, backend_forward
from dcufront.backend.bridge import bridge_complex_to_real, unbridge
from dcufront.backend.dropout import apply_dropout
from dcufront.backend.loss import ce_proxy_loss, frame_accuracy

__all__ = [
    "BackendConfig",
    "BackendModel",
    "apply_dropout",
    "backend_forward",
    "bridge_complex_to_real",
    "ce_proxy_loss",
    "frame_accuracy",
    "unbridge",
]
