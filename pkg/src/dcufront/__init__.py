"""
dcufront: multi-channel complex U-Net speech enhancement for far-field recognition.

Joint enhancement/recognition training of a complex-valued U-Net front-end
with a frame-level acoustic model, next to classic echo-cancellation and
beamforming baselines.
"""

__version__ = "0.1.0"
