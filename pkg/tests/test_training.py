"""Tests for the loss schedule, Adam, checkpoints, the trainer and evaluation."""
import hashlib
import struct
from dataclasses import replace

import numpy as np
import pytest

from dcufront.autodiff.tensor import Tensor
from dcufront.backend.loss import ce_proxy_loss
from dcufront.config import load_config
from dcufront.core.errors import CheckpointError, ConfigError, NonFiniteLossError
from dcufront.core.types import Bucket, SceneConfig, SystemKind, TrainSchedule
from dcufront.dcunet.loss import enhancement_loss
from dcufront.scenes.dataset import SceneDataset
from dcufront.systems import build_system, collate
from dcufront.training.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from dcufront.training.evaluate import REPORT_COLUMNS, evaluate, format_report
from dcufront.training.optim import Adam
from dcufront.training.schedule import mtl_loss
from dcufront.training.trainer import (
    Trainer,
    evaluate_enhancement_loss,
    init_sweep,
    pretrain_dcunet,
    train,
)


def _gradients(system, prefix):
    return {
        name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        for name, p in system.named_parameters().items()
        if name.startswith(prefix)
    }


@pytest.fixture
def batch(tiny_dataset):
    return collate([tiny_dataset.prepared(i) for i in (0, 1)])


class TestMtlLoss:
    """(1 - beta) L_asr + beta L_enh up to t_enh, then L_asr."""

    def test_weighted_sum(self):
        assert mtl_loss(1.0, 2.0, 1, TrainSchedule(beta=0.8, t_enh=3)) == pytest.approx(1.8)

    def test_cutover(self):
        schedule = TrainSchedule(beta=0.8, t_enh=3)
        assert mtl_loss(1.0, 2.0, 3, schedule) == pytest.approx(1.8)
        assert mtl_loss(1.0, 2.0, 4, schedule) == 1.0

    def test_zero_beta(self):
        assert mtl_loss(1.5, 9.0, 1, TrainSchedule(beta=0.0)) == 1.5

    def test_tensors_keep_the_graph(self):
        l_asr = Tensor(1.0, requires_grad=True)
        l_enh = Tensor(2.0, requires_grad=True)
        total = mtl_loss(l_asr, l_enh, 1, TrainSchedule(beta=0.8))
        assert total.item() == pytest.approx(1.8)
        total.backward()
        assert l_asr.grad == pytest.approx(0.2)
        assert l_enh.grad == pytest.approx(0.8)

    def test_schedule_validation(self):
        with pytest.raises(ConfigError):
            TrainSchedule(beta=1.5).validate()
        with pytest.raises(ConfigError):
            TrainSchedule(t_enh=-1).validate()


class TestGradientWeighting:
    """How the two heads share the encoder."""

    def test_encoder_gradients_combine_linearly(self, tiny_config, batch):
        schedule = replace(tiny_config.schedule, beta=0.8, t_enh=3)
        system = build_system("mtl", tiny_config)

        def encoder_grads(pick):
            system.zero_grad()
            out = system.forward(batch)
            l_asr = ce_proxy_loss(out.log_probs, batch.labels)
            l_enh = enhancement_loss(out.enhanced, batch.supervision)
            pick(l_asr, l_enh).backward()
            return _gradients(system, "dcunet.enc")

        mixed = encoder_grads(lambda a, e: mtl_loss(a, e, 1, schedule))
        asr = encoder_grads(lambda a, e: a)
        enh = encoder_grads(lambda a, e: e)
        for name in mixed:
            np.testing.assert_allclose(mixed[name], 0.2 * asr[name] + 0.8 * enh[name], rtol=1e-9, atol=1e-10)

    def test_decoder_gets_no_gradient_after_cutover(self, tiny_config, batch):
        system = build_system("mtl", tiny_config)
        out = system.forward(batch, enhancement=False)
        mtl_loss(ce_proxy_loss(out.log_probs, batch.labels), 0.0, 10, tiny_config.schedule).backward()
        for grad in _gradients(system, "dcunet.dec").values():
            assert np.all(grad == 0)

    def test_beta_one_silences_the_recognition_branch(self, tiny_config, batch):
        system = build_system("mtl", tiny_config)
        out = system.forward(batch)
        total = mtl_loss(
            ce_proxy_loss(out.log_probs, batch.labels),
            enhancement_loss(out.enhanced, batch.supervision),
            1,
            TrainSchedule(beta=1.0),
        )
        total.backward()
        for grad in _gradients(system, "backend").values():
            assert np.all(grad == 0)


class TestAdam:
    """Optimizer steps and moment state."""

    def test_first_step_moves_by_learning_rate(self):
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        p.grad = np.array([0.5, -3.0])
        Adam({"p": p}, lr=0.1).step()
        np.testing.assert_allclose(p.data, [0.9, -1.9], atol=1e-6)

    def test_frozen_and_gradless_parameters_stay(self):
        a = Tensor(np.ones(3), requires_grad=True)
        b = Tensor(np.ones(3), requires_grad=True)
        c = Tensor(np.ones(3), requires_grad=True)
        a.grad = np.ones(3)
        b.grad = np.ones(3)
        optimizer = Adam({"a": a, "b": b, "c": c}, lr=0.1)
        optimizer.step(frozen=("b",))
        assert np.all(a.data < 1)
        np.testing.assert_array_equal(b.data, np.ones(3))
        np.testing.assert_array_equal(c.data, np.ones(3))
        state = optimizer.state()
        assert np.all(state["m.b"] == 0) and np.all(state["v.c"] == 0)
        assert list(state) == ["m.a", "v.a", "m.b", "v.b", "m.c", "v.c"]

    def test_state_round_trip(self):
        p = Tensor(np.zeros(2), requires_grad=True)
        p.grad = np.array([1.0, 2.0])
        first = Adam({"p": p})
        first.step()
        second = Adam({"p": Tensor(np.zeros(2), requires_grad=True)})
        second.load_state(first.state(), first.t)
        assert second.t == 1
        np.testing.assert_array_equal(second.m["p"], first.m["p"])

    def test_load_state_checks_shapes(self):
        optimizer = Adam({"p": Tensor(np.zeros(2), requires_grad=True)})
        with pytest.raises(CheckpointError):
            optimizer.load_state({"m.p": np.zeros(3), "v.p": np.zeros(2)}, 1)
        with pytest.raises(CheckpointError):
            optimizer.load_state({}, 1)


@pytest.fixture
def checkpoint(rng) -> Checkpoint:
    return Checkpoint(
        state={"enc1.weight": rng.standard_normal((2, 3, 1, 1)), "dec1.bias": rng.standard_normal(4)},
        metadata={"system": "dcunet", "epoch": 2, "seed": 7, "config_digest": "abc"},
        moments={"m.enc1.weight": np.zeros((2, 3, 1, 1))},
    )


class TestCheckpoint:
    """Binary checkpoint format."""

    def test_decode_restores_everything(self, checkpoint):
        restored = decode_checkpoint(encode_checkpoint(checkpoint))
        assert restored.system is SystemKind.DCUNET
        assert restored.epoch == 2
        assert restored.metadata == checkpoint.metadata
        assert restored.parameter_names() == ["enc1.weight", "dec1.bias"]
        for name, value in checkpoint.state.items():
            np.testing.assert_array_equal(restored.state[name], value)
        assert restored.moments["m.enc1.weight"].shape == (2, 3, 1, 1)

    def test_save_load_save_is_byte_identical(self, checkpoint, tmp_path):
        first = save_checkpoint(tmp_path / "a.ckpt", checkpoint)
        second = save_checkpoint(tmp_path / "b.ckpt", load_checkpoint(first))
        assert first.read_bytes() == second.read_bytes()
        assert not (tmp_path / "a.ckpt.tmp").exists()

    def test_bad_magic(self, checkpoint):
        payload = encode_checkpoint(checkpoint)
        with pytest.raises(CheckpointError, match="magic"):
            decode_checkpoint(b"NOTACKPT" + payload[len(MAGIC):])

    def test_corrupted_payload(self, checkpoint):
        payload = bytearray(encode_checkpoint(checkpoint))
        payload[40] ^= 0xFF
        with pytest.raises(CheckpointError, match="digest"):
            decode_checkpoint(bytes(payload))

    def test_unsupported_version(self, checkpoint):
        body = encode_checkpoint(checkpoint)[:-32]
        body = MAGIC + struct.pack("<I", FORMAT_VERSION + 1) + body[len(MAGIC) + 4:]
        with pytest.raises(CheckpointError, match="version"):
            decode_checkpoint(body + hashlib.sha256(body).digest())

    def test_truncated_records(self, checkpoint):
        body = encode_checkpoint(checkpoint)[:-32][:-8]
        with pytest.raises(CheckpointError, match="truncated"):
            decode_checkpoint(body + hashlib.sha256(body).digest())

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.ckpt")


class TestTrainer:
    """Epoch loop, checkpoints and metrics."""

    def test_writes_checkpoint_and_metrics(self, tiny_config, tiny_dataset):
        result = train(
            build_system("mtl", tiny_config),
            tiny_dataset,
            tiny_config.schedule,
            checkpoint_path=tiny_config.paths.checkpoint,
            metrics_path=tiny_config.paths.metrics,
        )
        saved = load_checkpoint(tiny_config.paths.checkpoint)
        assert saved.system is SystemKind.MTL
        assert saved.epoch == 1
        assert saved.metadata["adam_step"] > 0
        lines = open(tiny_config.paths.metrics).read().splitlines()
        assert len(lines) == len(result.metrics) == 1
        epoch, system, l_asr, l_enh, accuracy = lines[0].split(",")
        assert (epoch, system) == ("1", "mtl")
        assert float(l_asr) > 0 and float(l_enh) > 0
        assert 0.0 <= float(accuracy) <= 1.0

    def test_same_seed_same_checkpoint_bytes(self, tiny_config, tiny_dataset, tmp_path):
        paths = [tmp_path / "first.ckpt", tmp_path / "second.ckpt"]
        for path in paths:
            train(build_system("mtl", tiny_config), tiny_dataset, tiny_config.schedule, checkpoint_path=path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_decoder_frozen_after_cutover(self, tiny_config, tiny_dataset):
        schedule = replace(tiny_config.schedule, t_enh=0)
        system = build_system("mtl", tiny_config)
        before = system.state_dict()
        trainer = Trainer(system, tiny_dataset, schedule)
        assert trainer.frozen(1) and set(trainer.frozen(1)) == set(system.decoder_parameter_names())
        assert trainer.frozen(0) == ()
        trainer.train()
        after = system.state_dict()
        for name in system.decoder_parameter_names():
            np.testing.assert_array_equal(after[name], before[name])
        assert any(
            not np.array_equal(after[name], before[name])
            for name in before if name.startswith("backend.") and name.endswith("weight")
        )

    def test_non_finite_loss_aborts(self, tiny_config, tiny_dataset):
        system = build_system("baseline", tiny_config)
        weight = next(iter(system.named_parameters().values()))
        weight.data = np.full_like(weight.data, np.nan)
        with pytest.raises(NonFiniteLossError) as excinfo:
            train(system, tiny_dataset, tiny_config.schedule)
        assert (excinfo.value.epoch, excinfo.value.step) == (1, 0)
        assert excinfo.value.last_good is None


class TestPretraining:
    """Stand-alone DCUnet training and initialisation from it."""

    @pytest.fixture
    def pretrained(self, tiny_config, tiny_dataset):
        return pretrain_dcunet(
            build_system("dcunet", tiny_config),
            tiny_dataset,
            tiny_config.schedule,
            checkpoint_path=tiny_config.paths.checkpoint,
        )

    def test_checkpoint_holds_only_the_dcunet(self, pretrained):
        prefixes = {name.split(".")[0] for name in pretrained.checkpoint.state}
        assert prefixes == {f"enc{i}" for i in range(1, 5)} | {f"dec{i}" for i in range(1, 5)}
        assert pretrained.checkpoint.metadata["final_l_enh"] == pretrained.final_l_enh

    def test_reload_reproduces_final_loss(self, pretrained, tiny_config, tiny_dataset):
        saved = load_checkpoint(tiny_config.paths.checkpoint)
        system = build_system("dcunet", tiny_config.with_seed(99))
        system.checkpoint_module().load_state_dict(saved.state)
        reloaded = evaluate_enhancement_loss(system, tiny_dataset, "train", tiny_config.schedule.batch_size)
        assert reloaded == pytest.approx(saved.metadata["final_l_enh"], abs=1e-10)

    def test_cascade_starts_where_pretraining_ended(self, pretrained, tiny_config, tiny_dataset):
        cascade = build_system("cascade", tiny_config)
        cascade.init_from(pretrained.checkpoint.state)
        result = train(cascade, tiny_dataset, tiny_config.schedule)
        assert result.initial_l_enh == pytest.approx(pretrained.final_l_enh, abs=1e-10)

    def test_only_dcunet_systems_pretrain(self, tiny_config, tiny_dataset):
        with pytest.raises(ConfigError):
            pretrain_dcunet(build_system("mtl", tiny_config), tiny_dataset, tiny_config.schedule)

    def test_init_sweep_reports_both_runs(self, pretrained, tiny_config, tiny_dataset):
        outcome = init_sweep(
            lambda: build_system("mtl", tiny_config),
            tiny_dataset,
            tiny_config.schedule,
            pretrained.checkpoint,
            epochs=1,
        )
        assert set(outcome) == {"random", "pretrained"}
        assert all(value is not None and value > 0 for value in outcome.values())

    @pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
    def test_beta_sweep_runs(self, tiny_config, tiny_dataset, beta):
        schedule = replace(tiny_config.schedule, beta=beta)
        result = train(build_system("mtl", tiny_config), tiny_dataset, schedule)
        assert len(result.metrics) == 1


class TestEvaluate:
    """Per-bucket report."""

    def test_buckets_partition_the_test_split(self, tiny_config, tiny_dataset):
        report = evaluate(build_system("mtl", tiny_config), tiny_dataset, "test", 2)
        assert report.total.num_scenes == len(tiny_dataset.indices("test"))
        assert sum(r.num_scenes for r in report.buckets.values()) == report.total.num_scenes
        assert report.total.frames == 18 * report.total.num_scenes
        assert report.enhancement_mse is not None and report.unprocessed_mse > 0

    def test_absent_bucket_is_none(self, tiny_config, tiny_dataset):
        report = evaluate(build_system("baseline", tiny_config), tiny_dataset, "test", 2)
        for bucket in Bucket:
            if bucket not in report.buckets:
                assert report.accuracy(bucket) is None
        assert report.enhancement_mse is None

    def test_re_evaluation_is_identical(self, tiny_config, tiny_dataset):
        system = build_system("nnfb", tiny_config)
        first = evaluate(system, tiny_dataset)
        second = evaluate(system, tiny_dataset)
        assert format_report(first) == format_report(second)

    def test_report_layout(self, tiny_config, tiny_dataset):
        text = format_report(evaluate(build_system("cascade", tiny_config), tiny_dataset))
        assert REPORT_COLUMNS == ["Echoed", "<5 dB", "[5,15) dB", ">=15 dB", "Total"]
        for column in REPORT_COLUMNS:
            assert column in text
        assert "Frame acc (%)" in text
        assert "Enhancement MSE" in text

    def test_empty_split(self, tiny_config):
        cfg = replace(tiny_config.scenes, num_scenes=2, test_fraction=1e-12)
        dataset = SceneDataset.from_config(cfg)
        with pytest.raises(ConfigError) as excinfo:
            evaluate(build_system("baseline", tiny_config), dataset)
        assert excinfo.value.key == "paths.scenes"

    @pytest.mark.slow
    def test_untrained_model_is_at_chance(self):
        dataset = SceneDataset.from_config(SceneConfig(num_scenes=200, duration_s=1.0, seed=21))
        config = load_config(None, env={})
        report = evaluate(build_system("baseline", config), dataset, "all", 8)
        assert report.accuracy() == pytest.approx(1 / 8, abs=0.05)
