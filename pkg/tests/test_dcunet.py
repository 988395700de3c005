"""Tests for complex layers, the DCUnet and the enhancement loss."""
import numpy as np
import pytest

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.gradcheck import gradcheck
from dcufront.autodiff.tensor import Graph, Tensor
from dcufront.core.errors import GeometryError, ShapeError
from dcufront.core.types import Spectrogram
from dcufront.dcunet.layers import (
    ComplexConv2d,
    ComplexConvTranspose2d,
    complex_conv2d,
    multichannel_input_layer,
)
from dcufront.dcunet.loss import enhancement_loss
from dcufront.dcunet.model import DcunetConfig, DcunetModel, dcunet_forward
from dcufront.dsp.stft import stft


def _complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _unit_kernel(real: float, imag: float, rng) -> ComplexConv2d:
    conv = ComplexConv2d(1, 1, (1, 1), rng)
    conv.weight_real.data = np.full((1, 1, 1, 1), real)
    conv.weight_imag.data = np.full((1, 1, 1, 1), imag)
    return conv


class TestComplexConvolution:
    """W * X = (Wr*R - Wi*I) + i(Wr*I + Wi*R)."""

    def test_unit_real_kernel_is_identity(self, rng):
        x = _complex(rng, (1, 1, 4, 5))
        out = _unit_kernel(1.0, 0.0, rng)(ComplexTensor.from_numpy(x))
        np.testing.assert_allclose(out.numpy(), x)

    def test_unit_imaginary_kernel_multiplies_by_i(self, rng):
        x = _complex(rng, (1, 1, 4, 5))
        out = _unit_kernel(0.0, 1.0, rng)(ComplexTensor.from_numpy(x))
        np.testing.assert_allclose(out.real.data, -x.imag)
        np.testing.assert_allclose(out.imag.data, x.real)

    def test_matches_nested_loop_oracle(self, rng):
        x = _complex(rng, (1, 2, 4, 4))
        w = _complex(rng, (3, 2, 2, 2))
        out = complex_conv2d(
            ComplexTensor.from_numpy(x), Tensor(w.real), Tensor(w.imag)
        ).numpy()
        expected = np.zeros((1, 3, 3, 3), dtype=complex)
        for o in range(3):
            for i in range(3):
                for j in range(3):
                    for c in range(2):
                        for a in range(2):
                            for b in range(2):
                                expected[0, o, i, j] += w[o, c, a, b] * x[0, c, i + a, j + b]
        np.testing.assert_allclose(out, expected, atol=1e-12)

    @pytest.mark.parametrize("seed", range(100))
    def test_random_instances_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        c_in, c_out = rng.integers(1, 4, size=2)
        h, w = rng.integers(2, 5, size=2)
        kh, kw = rng.integers(1, h + 1), rng.integers(1, w + 1)
        x = _complex(rng, (1, c_in, h, w))
        k = _complex(rng, (c_out, c_in, kh, kw))
        out = complex_conv2d(ComplexTensor.from_numpy(x), Tensor(k.real), Tensor(k.imag)).numpy()
        expected = np.zeros((1, c_out, h - kh + 1, w - kw + 1), dtype=complex)
        for o, i, j in np.ndindex(*expected.shape[1:]):
            expected[0, o, i, j] = np.sum(k[o] * x[0, :, i:i + kh, j:j + kw])
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)

    def test_same_padding_and_stride(self, rng):
        conv = ComplexConv2d(3, 4, (7, 5), rng, stride=(2, 2))
        assert conv.output_size((257, 18)) == (129, 9)
        out = conv(ComplexTensor.from_numpy(_complex(rng, (1, 3, 257, 18))))
        assert out.shape == (1, 4, 129, 9)

    def test_channel_mismatch(self, rng):
        conv = ComplexConv2d(2, 4, (3, 3), rng)
        with pytest.raises(ShapeError):
            conv(ComplexTensor.from_numpy(_complex(rng, (1, 3, 5, 5))))

    def test_transposed_is_adjoint(self, rng):
        x = rng.standard_normal((2, 3, 6, 5))
        y = rng.standard_normal((2, 4, 3, 3))
        w = rng.standard_normal((4, 3, 3, 3))
        forward = ops.conv2d(Tensor(x), Tensor(w), None, 2, 1).data
        adjoint = ops.conv_transpose2d(Tensor(y), Tensor(w), None, 2, 1, (1, 0)).data
        assert adjoint.shape == x.shape
        assert np.sum(forward * y) == pytest.approx(np.sum(x * adjoint))

    def test_transposed_restores_target_size(self, rng):
        deconv = ComplexConvTranspose2d(2, 1, (7, 5), rng, stride=(2, 2))
        out = deconv(ComplexTensor.from_numpy(_complex(rng, (1, 2, 129, 9))), (257, 18))
        assert out.shape == (1, 1, 257, 18)

    def test_unreachable_target_size(self, rng):
        deconv = ComplexConvTranspose2d(1, 1, (3, 3), rng, stride=(2, 2))
        with pytest.raises(GeometryError):
            deconv(ComplexTensor.from_numpy(_complex(rng, (1, 1, 3, 3))), (7, 5))


class TestMultichannelInputLayer:
    """{mic1, mic2, reference} stacked as three input channels."""

    def test_zero_inputs_give_zero_output(self, rng):
        zero = np.zeros((257, 16), dtype=complex)
        conv = ComplexConv2d(3, 16, (7, 5), rng, stride=(2, 2))
        out = multichannel_input_layer(zero, zero, zero, conv)
        assert out.shape == (1, 16, 129, 8)
        assert np.all(out.numpy() == 0)

    def test_accepts_spectrograms(self, rng):
        spec = stft(rng.standard_normal((3, 3200)))
        conv = ComplexConv2d(3, 2, (3, 3), rng)
        out = multichannel_input_layer(spec.channel(0), spec.channel(1), spec.channel(2), conv)
        assert out.shape == (1, 2, 257, 18)

    def test_geometry_mismatch(self, rng):
        conv = ComplexConv2d(3, 2, (3, 3), rng)
        with pytest.raises(GeometryError):
            multichannel_input_layer(
                np.zeros((257, 16)), np.zeros((257, 16)), np.zeros((257, 17)), conv
            )

    def test_layer_must_take_three_channels(self, rng):
        zero = np.zeros((257, 16), dtype=complex)
        with pytest.raises(ShapeError):
            multichannel_input_layer(zero, zero, zero, ComplexConv2d(2, 2, (3, 3), rng))


class TestDcunetModel:
    """Encoder/decoder geometry."""

    def test_encoder_geometry(self):
        model = DcunetModel(DcunetConfig(), np.random.default_rng(0))
        assert model.encoded_size((257, 16)) == (17, 1)
        assert [b.conv.out_channels for b in model.encoders] == [16, 32, 64, 64]
        assert model.decoders[-1].deconv.out_channels == 1

    @pytest.mark.parametrize("frames", [16, 18, 21])
    def test_output_geometry_matches_input(self, frames):
        model = DcunetModel(DcunetConfig.tiny(), np.random.default_rng(0))
        x = ComplexTensor.from_numpy(_complex(np.random.default_rng(1), (2, 3, 257, frames)))
        assert model(x).shape == (2, 1, 257, frames)

    def test_skip_connections_double_decoder_inputs(self):
        model = DcunetModel(DcunetConfig(), np.random.default_rng(0))
        assert [b.deconv.in_channels for b in model.decoders] == [64, 128, 64, 32]

    def test_too_few_frames(self):
        model = DcunetModel(DcunetConfig.tiny())
        x = ComplexTensor.from_numpy(np.zeros((1, 3, 257, 15), dtype=complex))
        with pytest.raises(GeometryError, match="16"):
            model(x)

    def test_wrong_channel_count(self):
        model = DcunetModel(DcunetConfig.tiny())
        with pytest.raises(ShapeError):
            model(ComplexTensor.from_numpy(np.zeros((1, 2, 257, 16), dtype=complex)))

    def test_zero_input_gives_zero_output(self):
        model = DcunetModel(DcunetConfig.tiny())
        out = model(ComplexTensor.from_numpy(np.zeros((1, 3, 257, 16), dtype=complex)))
        assert np.all(out.numpy() == 0)

    def test_parameter_names(self):
        model = DcunetModel(DcunetConfig.tiny())
        prefixes = {name.split(".")[0] for name in model.named_parameters()}
        assert prefixes == {f"enc{i}" for i in range(1, 5)} | {f"dec{i}" for i in range(1, 5)}

    def test_gradcheck_at_small_geometry(self):
        rng = np.random.default_rng(5)
        model = DcunetModel(DcunetConfig.tiny(), rng)
        x = ComplexTensor.from_numpy(_complex(rng, (2, 3, 17, 16)))
        target = np.abs(_complex(rng, (2, 17, 16)))
        graph = Graph(lambda inputs, params: enhancement_loss(model(x), target), model.named_parameters())
        report = gradcheck(graph, {}, tolerance=1e-4, max_entries=3)
        assert report.passed, report.summary()

    def test_inference_on_spectrograms(self, rng):
        model = DcunetModel(DcunetConfig.tiny())
        model.eval()
        spec = stft(rng.standard_normal((3, 3200)))
        out = dcunet_forward(model, spec.channel(0), spec.channel(1), spec.channel(2))
        assert isinstance(out, Spectrogram)
        assert out.data.shape == (1, 257, 18)
        assert out.same_geometry(spec.channel(0))


class TestEnhancementLoss:
    """mean((M_sup - |O|)^2)."""

    def test_hand_computed_single_bin(self):
        prediction = ComplexTensor(Tensor([[[[3.0]]]]), Tensor([[[[4.0]]]]))
        assert enhancement_loss(prediction, np.array([[[2.0]]])).item() == pytest.approx(9.0)

    def test_matching_magnitude_gives_zero(self, rng):
        o = _complex(rng, (2, 1, 9, 4))
        loss = enhancement_loss(ComplexTensor.from_numpy(o), np.abs(o[:, 0]))
        assert loss.item() == pytest.approx(0.0, abs=1e-24)

    def test_zero_prediction(self, rng):
        target = rng.random((2, 9, 4))
        loss = enhancement_loss(ComplexTensor.from_numpy(np.zeros((2, 1, 9, 4))), target)
        assert loss.item() == pytest.approx(np.mean(target ** 2))

    def test_accepts_spectrogram(self, rng):
        spec = stft(rng.standard_normal(1600))
        assert enhancement_loss(spec, np.abs(spec.data)).item() == pytest.approx(0.0, abs=1e-20)

    def test_geometry_mismatch(self):
        with pytest.raises(ShapeError):
            enhancement_loss(ComplexTensor.from_numpy(np.zeros((1, 1, 9, 4))), np.zeros((9, 5)))
