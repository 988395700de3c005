"""Gradient checks of every layer type, as run by `dcufront gradcheck`."""
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple, Union

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor, complex_leaky_relu
from dcufront.autodiff.gradcheck import GradcheckReport, gradcheck
from dcufront.autodiff.nn import Module
from dcufront.autodiff.tensor import Graph, Tensor
from dcufront.backend.acoustic_model import BackendModel, ConvBnRelu
from dcufront.backend.bridge import bridge_complex_to_real
from dcufront.backend.loss import ce_proxy_loss
from dcufront.config import ModelPreset
from dcufront.core.log import get_logger
from dcufront.core.types import ArrayGeometry
from dcufront.dcunet.layers import ComplexBatchNorm2d, ComplexConv2d, ComplexConvTranspose2d
from dcufront.dcunet.loss import enhancement_loss
from dcufront.dcunet.model import DcunetModel
from dcufront.frontend.beamformer import superdirective_weights
from dcufront.frontend.nnfb import NeuralFixedBeamformer

logger = get_logger(__name__)

Output = Tuple[Tensor, ...]
Case = Tuple[Dict[str, Tensor], Callable[[Dict[str, Tensor]], Output]]


@dataclass
class LayerCheck:
    """Gradient-check outcome for one layer type."""
    layer: str
    report: GradcheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed

    @property
    def max_error(self) -> float:
        return self.report.max_error


def _leaf(rng: np.random.Generator, shape, name: str) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True, name=name)


def _complex_leaf(rng: np.random.Generator, shape, name: str) -> ComplexTensor:
    return ComplexTensor(_leaf(rng, shape, f"{name}.real"), _leaf(rng, shape, f"{name}.imag"))


def _planes(x: ComplexTensor) -> Output:
    return x.real, x.imag


def _with_params(module: Module, extra: Dict[str, Tensor] = None) -> Dict[str, Tensor]:
    params = dict(module.named_parameters())
    params.update(extra or {})
    return params


def _graph(name: str, case: Case, rng: np.random.Generator) -> Graph:
    """Graph whose scalar output is a fixed random projection of the case outputs."""
    parameters, run = case
    projections: List[np.ndarray] = []

    def fn(inputs, params):
        outputs = run(params)
        if not projections:
            projections.extend(rng.standard_normal(o.shape) for o in outputs)
        terms = [ops.sum(ops.mul(o, Tensor(w))) for o, w in zip(outputs, projections)]
        total = terms[0]
        for term in terms[1:]:
            total = ops.add(total, term)
        return total

    return Graph(fn, parameters, name=name)


def _cases(preset: ModelPreset, rng: np.random.Generator) -> List[Tuple[str, Case]]:
    cases: List[Tuple[str, Case]] = []

    conv = ComplexConv2d(2, 3, (3, 3), rng, stride=(2, 2), bias=True)
    x = _complex_leaf(rng, (2, 2, 5, 6), "x")
    cases.append(("complex conv2d", (
        _with_params(conv, {"x.real": x.real, "x.imag": x.imag}),
        lambda p, conv=conv, x=x: _planes(conv(x)),
    )))

    deconv = ComplexConvTranspose2d(3, 2, (3, 3), rng, stride=(2, 2), bias=True)
    x = _complex_leaf(rng, (2, 3, 3, 3), "x")
    cases.append(("complex transposed conv2d", (
        _with_params(deconv, {"x.real": x.real, "x.imag": x.imag}),
        lambda p, deconv=deconv, x=x: _planes(deconv(x, (5, 6))),
    )))

    bn = ComplexBatchNorm2d(3)
    x = _complex_leaf(rng, (4, 3, 2, 3), "x")
    cases.append(("split batch norm", (
        _with_params(bn, {"x.real": x.real, "x.imag": x.imag}),
        lambda p, bn=bn, x=x: _planes(bn(x)),
    )))

    x = _complex_leaf(rng, (2, 3, 4, 5), "x")
    cases.append(("complex leaky relu", (
        {"x.real": x.real, "x.imag": x.imag},
        lambda p, x=x: _planes(complex_leaky_relu(x, 0.1)),
    )))

    x = _complex_leaf(rng, (2, 3, 4, 5), "x")
    cases.append(("complex-to-real bridge", (
        {"x.real": x.real, "x.imag": x.imag},
        lambda p, x=x: (bridge_complex_to_real(x),),
    )))

    cnn = ConvBnRelu(2, 3, (5, 3), rng, stride=(2, 1), padding=(2, 1))
    x = _leaf(rng, (2, 2, 8, 5), "x")
    cases.append(("real cnn (conv + bn + relu)", (
        _with_params(cnn, {"x": x}),
        lambda p, cnn=cnn, x=x: (cnn(x),),
    )))

    tdnn = ConvBnRelu(6, 4, (1, 5), rng, padding=(0, 2))
    x = _leaf(rng, (2, 6, 1, 7), "x")
    cases.append(("tdnn layer", (
        _with_params(tdnn, {"x": x}),
        lambda p, tdnn=tdnn, x=x: (tdnn(x),),
    )))

    x = _leaf(rng, (2, 5, 4), "x")
    cases.append(("log-softmax", ({"x": x}, lambda p, x=x: (ops.log_softmax(x, axis=-1),))))

    prediction = _complex_leaf(rng, (2, 1, 5, 6), "o")
    supervision = np.abs(rng.standard_normal((2, 5, 6)))
    cases.append(("enhancement loss", (
        {"o.real": prediction.real, "o.imag": prediction.imag},
        lambda p, o=prediction, s=supervision: (enhancement_loss(o, s),),
    )))

    logits = _leaf(rng, (2, 6, 4), "logits")
    labels = rng.integers(0, 4, size=(2, 6))
    cases.append(("cross-entropy proxy loss", (
        {"logits": logits},
        lambda p, z=logits, y=labels: (ce_proxy_loss(ops.log_softmax(z, axis=-1), y),),
    )))

    nnfb = NeuralFixedBeamformer(
        superdirective_weights(ArrayGeometry(), 17, preset.diagonal_loading), rng, num_mels=8,
        context=preset.nnfb_context,
    )
    x = ComplexTensor.from_numpy(rng.standard_normal((2, 2, 17, 6)) + 1j * rng.standard_normal((2, 2, 17, 6)))
    cases.append(("nnfb beams + selector", (_with_params(nnfb), lambda p, nnfb=nnfb, x=x: (nnfb(x),))))

    dcunet = DcunetModel(preset.dcunet, rng)
    bins, frames = 9, preset.dcunet.min_frames
    x = ComplexTensor.from_numpy(
        rng.standard_normal((2, 3, bins, frames)) + 1j * rng.standard_normal((2, 3, bins, frames))
    )
    target = np.abs(rng.standard_normal((2, bins, frames)))
    cases.append(("dcunet + enhancement loss", (
        _with_params(dcunet),
        lambda p, m=dcunet, x=x, s=target: (enhancement_loss(m(x), s),),
    )))

    backend_cfg = preset.backend.with_input(1, 12)
    backend = BackendModel(backend_cfg, rng)
    x = Tensor(rng.standard_normal((2, 1, 12, 6)))
    cases.append(("back-end (cnn + tdnn + log-softmax)", (
        _with_params(backend),
        lambda p, m=backend, x=x: (m(x),),
    )))
    return cases


def gradcheck_suite(
    preset: Union[str, ModelPreset] = "tiny",
    tolerance: float = 1e-4,
    seed: int = 0,
    max_entries: int = 6,
) -> List[LayerCheck]:
    """
    Gradient-check every layer type on small random inputs.

    Args:
        preset: Model preset (or its name) supplying the DCUnet and back-end layout
        tolerance: Relative-error threshold for pass/fail
        seed: Seed for inputs, parameters and entry sampling
        max_entries: Entries probed per parameter tensor

    Returns:
        One LayerCheck per layer type, in a fixed order
    """
    if isinstance(preset, str):
        preset = ModelPreset.named(preset)
    rng = np.random.default_rng(seed)
    results = []
    for name, case in _cases(preset, rng):
        graph = _graph(name, case, rng)
        report = gradcheck(graph, {}, tolerance=tolerance, max_entries=max_entries, seed=seed)
        logger.debug("%s: %s", name, report.summary())
        results.append(LayerCheck(name, report))
    return results
