"""Tests for the tensor tape, graphs, modules and the gradient checker."""
import threading

import numpy as np
import pytest

from dcufront.autodiff import ops
from dcufront.autodiff.gradcheck import gradcheck
from dcufront.autodiff.nn import BatchNorm2d, Conv2d, Module
from dcufront.autodiff.tensor import Graph, Tensor, no_grad
from dcufront.core.errors import (
    GradcheckError,
    GraphStateError,
    ParameterMismatchError,
    ShapeError,
)


def _param(values, name="w") -> Tensor:
    return Tensor(np.asarray(values, dtype=np.float64), requires_grad=True, name=name)


class TestGraphForward:
    """Forward evaluation of named-input graphs."""

    def test_identity_graph(self):
        graph = Graph()
        outputs = graph.forward({"x": [1.0, 2.0, 3.0]})
        np.testing.assert_array_equal(outputs["x"].data, [1.0, 2.0, 3.0])

    def test_chain_of_squares(self):
        graph = Graph(lambda inputs, params: ops.square(ops.square(inputs["x"])))
        outputs = graph.forward({"x": [2.0]})
        np.testing.assert_array_equal(outputs["output"].data, [16.0])

    def test_declared_shape_mismatch_names_node(self):
        graph = Graph(input_shapes={"x": (3,)}, name="g")
        with pytest.raises(ShapeError) as excinfo:
            graph.forward({"x": np.zeros(4)})
        assert excinfo.value.node == "g.x"
        assert excinfo.value.expected == (3,)
        assert excinfo.value.actual == (4,)

    def test_missing_declared_input(self):
        graph = Graph(input_shapes={"x": (3,)})
        with pytest.raises(ShapeError):
            graph.forward({})

    def test_tape_only_records_when_needed(self):
        a = Tensor([1.0, 2.0])
        b = ops.mul(a, a)
        assert not b.requires_grad
        assert b.is_leaf

        w = _param([1.0, 2.0])
        with no_grad():
            c = ops.mul(w, w)
        assert not c.requires_grad

    def test_no_grad_in_another_thread_keeps_this_tape(self):
        entered, release = threading.Event(), threading.Event()

        def inference():
            with no_grad():
                entered.set()
                release.wait(timeout=10)

        worker = threading.Thread(target=inference)
        worker.start()
        try:
            assert entered.wait(timeout=10)
            w = _param([1.0, 2.0])
            assert ops.mul(w, w).requires_grad
        finally:
            release.set()
            worker.join()


class TestGraphBackward:
    """Reverse-mode gradients."""

    def test_backward_before_forward(self):
        graph = Graph(lambda inputs, params: ops.sum(inputs["x"]))
        with pytest.raises(GraphStateError):
            graph.backward()

    def test_unknown_output_seed(self):
        graph = Graph(lambda inputs, params: ops.sum(params["w"]), {"w": _param([1.0])})
        graph.forward({})
        with pytest.raises(GraphStateError):
            graph.backward({"missing": None})

    def test_sum_gradient_is_ones(self):
        graph = Graph(lambda inputs, params: ops.sum(params["x"]), {"x": _param(np.zeros(3), "x")})
        graph.forward({})
        graph.backward()
        np.testing.assert_array_equal(graph.gradients()["x"], [1.0, 1.0, 1.0])

    def test_sum_of_squares_gradient(self):
        graph = Graph(
            lambda inputs, params: ops.sum(ops.square(params["x"])),
            {"x": _param([1.0, 2.0], "x")},
        )
        graph.forward({})
        graph.backward()
        np.testing.assert_allclose(graph.gradients()["x"], [2.0, 4.0])

    def test_shared_node_accumulates(self):
        w = _param([3.0])
        loss = ops.add(ops.mul(w, w), w)
        loss.backward()
        np.testing.assert_allclose(w.grad, [7.0])

    def test_unreached_parameter_has_zero_gradient(self):
        graph = Graph(
            lambda inputs, params: ops.sum(params["a"]),
            {"a": _param([1.0, 2.0], "a"), "b": _param([5.0], "b")},
        )
        graph.forward({})
        graph.backward()
        np.testing.assert_array_equal(graph.gradients()["b"], [0.0])

    def test_random_three_layer_graph_matches_finite_differences(self, rng):
        params = {
            "w1": _param(rng.standard_normal((5, 4)), "w1"),
            "w2": _param(rng.standard_normal((6, 5)), "w2"),
            "w3": _param(rng.standard_normal((3, 6)), "w3"),
        }

        def fn(inputs, p):
            h = ops.leaky_relu(ops.linear_along(inputs["x"], p["w1"], axis=1), 0.1)
            h = ops.exp(ops.scale(ops.linear_along(h, p["w2"], axis=1), 0.1))
            return ops.sum(ops.log_softmax(ops.linear_along(h, p["w3"], axis=1), axis=1))

        graph = Graph(fn, params, input_shapes={"x": (7, 4)})
        report = gradcheck(graph, {"x": rng.standard_normal((7, 4))}, tolerance=1e-4)
        assert report.passed, report.summary()


class TestGradcheck:
    """Finite-difference verification."""

    def test_linear_layer_passes(self, rng):
        params = {"w": _param(rng.standard_normal((3, 4))), "b": _param(rng.standard_normal(3), "b")}

        def fn(inputs, p):
            y = ops.add(ops.linear_along(inputs["x"], p["w"], axis=1), ops.reshape(p["b"], (1, 3)))
            return ops.sum(ops.square(y))

        report = gradcheck(Graph(fn, params), {"x": rng.standard_normal((5, 4))}, tolerance=1e-4)
        assert report.passed
        assert set(report.errors) == {"w", "b"}
        assert report.entries_checked == {"w": 12, "b": 3}

    def test_gradient_off_by_two_fails_with_unit_error(self):
        w = _param([0.5, -1.5, 2.0])

        def fn(inputs, p):
            x = p["w"]
            return ops.custom([x], np.sum(x.data ** 2), lambda g: (g * 4.0 * x.data,), "planted")

        report = gradcheck(Graph(fn, {"w": w}), {}, tolerance=1e-4)
        assert not report.passed
        assert report.failures.keys() == {"w"}
        assert report.errors["w"] == pytest.approx(1.0, abs=1e-6)

    def test_max_entries_limits_checked_entries(self, rng):
        w = _param(rng.standard_normal(50))
        graph = Graph(lambda inputs, p: ops.sum(ops.square(p["w"])), {"w": w})
        report = gradcheck(graph, {}, max_entries=7)
        assert report.entries_checked["w"] == 7

    def test_non_finite_loss_names_parameter(self):
        def fn(inputs, p):
            x = p["w"]
            value = np.inf if x.data[0] > 0 else float(np.sum(x.data))
            return ops.custom([x], value, lambda g: (np.full_like(x.data, g),), "cliff")

        graph = Graph(fn, {"w": _param([0.0])})
        with pytest.raises(GradcheckError) as excinfo:
            gradcheck(graph, {})
        assert excinfo.value.parameter == "w"

    def test_several_outputs_need_a_loss_key(self):
        w = _param([1.0, 2.0])
        graph = Graph(lambda inputs, p: {"a": ops.sum(p["w"]), "b": ops.sum(ops.square(p["w"]))}, {"w": w})
        with pytest.raises(GraphStateError):
            gradcheck(graph, {})
        assert gradcheck(graph, {}, loss_key="b").passed

    def test_conv_and_batch_norm(self, rng):
        conv = Conv2d(2, 3, (3, 3), rng, stride=(2, 1))
        bn = BatchNorm2d(3)
        params = dict(conv.named_parameters("conv."))
        params.update(bn.named_parameters("bn."))
        x = rng.standard_normal((2, 2, 6, 5))
        projection = rng.standard_normal((2, 3, 3, 5))

        def fn(inputs, p):
            return ops.sum(ops.mul(ops.relu(bn(conv(inputs["x"]))), Tensor(projection)))

        assert gradcheck(Graph(fn, params), {"x": x}, tolerance=1e-4).passed


class _Pair(Module):
    def __init__(self, rng):
        super().__init__()
        self.conv = self.add_module("conv", Conv2d(1, 2, (3, 3), rng))
        self.bn = self.add_module("bn", BatchNorm2d(2))

    def forward(self, x):
        return self.bn(self.conv(x))


class TestModule:
    """Parameter registry and state dictionaries."""

    def test_named_parameters_and_buffers(self, rng):
        model = _Pair(rng)
        assert list(model.named_parameters()) == ["conv.weight", "conv.bias", "bn.gamma", "bn.beta"]
        assert list(model.named_buffers()) == ["bn.running_mean", "bn.running_var"]
        assert model.num_parameters() == 2 * 9 + 2 + 2 + 2

    def test_state_dict_round_trip(self, rng):
        source, target = _Pair(rng), _Pair(np.random.default_rng(99))
        target.load_state_dict(source.state_dict())
        for name, value in source.state_dict().items():
            np.testing.assert_array_equal(target.state_dict()[name], value)

    def test_strict_load_reports_missing_and_unexpected(self, rng):
        model = _Pair(rng)
        state = model.state_dict()
        del state["bn.gamma"]
        state["extra"] = np.zeros(1)
        with pytest.raises(ParameterMismatchError) as excinfo:
            model.load_state_dict(state)
        assert excinfo.value.missing == ["bn.gamma"]
        assert excinfo.value.unexpected == ["extra"]
        diff = excinfo.value.diff()
        assert "- bn.gamma (missing)" in diff
        assert "+ extra (unexpected)" in diff

    def test_shape_mismatch_fails_even_when_lenient(self, rng):
        model = _Pair(rng)
        with pytest.raises(ParameterMismatchError) as excinfo:
            model.load_state_dict({"conv.bias": np.zeros(5)}, strict=False)
        assert excinfo.value.mismatched == [("conv.bias", (2,), (5,))]

    def test_lenient_load_skips_unknown_names(self, rng):
        model = _Pair(rng)
        loaded = model.load_state_dict({"conv.bias": np.ones(2), "other": np.zeros(3)}, strict=False)
        assert loaded == ["conv.bias"]
        np.testing.assert_array_equal(model.conv.bias.data, [1.0, 1.0])

    def test_eval_uses_running_statistics(self, rng):
        model = _Pair(rng)
        x = Tensor(rng.standard_normal((2, 1, 4, 4)))
        model.train()
        model(x)
        running = model.bn.running_mean.copy()
        model.eval()
        assert not model.bn.training
        model(x)
        np.testing.assert_array_equal(model.bn.running_mean, running)
