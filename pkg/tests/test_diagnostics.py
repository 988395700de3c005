"""Tests for the layer-by-layer gradient check suite."""
import pytest

from dcufront.config import ModelPreset
from dcufront.diagnostics import gradcheck_suite


@pytest.fixture(scope="module")
def checks():
    return gradcheck_suite("tiny")


class TestGradcheckSuite:
    """Every layer type passes at the default tolerance."""

    def test_all_layer_types_pass(self, checks):
        failures = [f"{c.layer}: {c.report.summary()}" for c in checks if not c.passed]
        assert not failures, "\n".join(failures)

    def test_layer_inventory(self, checks):
        assert len(checks) == 13
        layers = [c.layer for c in checks]
        assert len(set(layers)) == len(layers)
        for expected in (
            "complex conv2d",
            "complex transposed conv2d",
            "split batch norm",
            "complex-to-real bridge",
            "tdnn layer",
            "nnfb beams + selector",
            "dcunet + enhancement loss",
        ):
            assert expected in layers

    def test_every_check_examined_entries(self, checks):
        for check in checks:
            assert check.report.errors
            assert sum(check.report.entries_checked.values()) > 0

    def test_impossible_tolerance_fails(self):
        checks = gradcheck_suite(ModelPreset.named("tiny"), tolerance=1e-14, max_entries=2)
        assert any(not c.passed for c in checks)

    def test_same_seed_same_errors(self):
        first = gradcheck_suite("tiny", max_entries=2, seed=4)
        second = gradcheck_suite("tiny", max_entries=2, seed=4)
        assert [c.max_error for c in first] == [c.max_error for c in second]
