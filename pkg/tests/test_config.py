"""Tests for run configuration loading and overrides."""
import pytest

from dcufront.config import SEED_ENV, ModelPreset, RunConfig, load_config
from dcufront.core.errors import ConfigError


def _write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return path


class TestDefaults:
    """Built-in configuration."""

    def test_defaults_validate(self):
        config = load_config(None, env={}).validate()
        assert config.model.name == "desk"
        assert config.scenes.num_classes == config.model.num_classes == 8
        assert (config.schedule.beta, config.schedule.t_enh) == (0.8, 3)
        assert config.stft.num_bins == 257

    @pytest.mark.parametrize("name,classes", [("desk", 8), ("full", 2888), ("tiny", 4)])
    def test_presets(self, name, classes):
        config = RunConfig().with_preset(name)
        assert config.model.name == name
        assert config.scenes.num_classes == classes
        config.validate()

    def test_unknown_preset(self):
        with pytest.raises(ConfigError) as excinfo:
            ModelPreset.named("huge")
        assert excinfo.value.key == "model.preset"

    def test_class_count_must_match_the_model(self):
        config = RunConfig()
        config.scenes.num_classes = 5
        with pytest.raises(ConfigError) as excinfo:
            config.validate()
        assert excinfo.value.key == "scenes.num_classes"


class TestIniFiles:
    """INI sections override defaults."""

    def test_sections_are_applied(self, tmp_path):
        path = _write(tmp_path, (
            "[scenes]\nnum_scenes = 40\nduration_s = 1.5\n"
            "[schedule]\nbeta = 0.5\nt_enh = 2\nadam_betas = 0.8, 0.99\n"
            "[model]\npreset = tiny\nhidden = 7\n"
            "[paths]\ncheckpoint = out/model.ckpt\n"
        ))
        config = load_config(path, env={}).validate()
        assert config.scenes.num_scenes == 40
        assert config.scenes.duration_s == 1.5
        assert config.schedule.beta == 0.5
        assert config.schedule.adam_betas == (0.8, 0.99)
        assert config.model.name == "tiny"
        assert config.model.backend.hidden == 7
        assert config.scenes.num_classes == 4
        assert config.paths.checkpoint == "out/model.ckpt"

    def test_encoder_channels(self, tmp_path):
        path = _write(tmp_path, "[model]\nencoder_channels = 4, 8, 8, 8\n")
        config = load_config(path, env={})
        assert config.model.dcunet.encoder_channels == (4, 8, 8, 8)

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, "[optimizer]\nlr = 1\n"), env={})

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            load_config(_write(tmp_path, "[schedule]\nmomentum = 0.9\n"), env={})
        assert excinfo.value.key == "schedule.momentum"

    def test_unparsable_value(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            load_config(_write(tmp_path, "[scenes]\nnum_scenes = many\n"), env={})
        assert excinfo.value.key == "scenes.num_scenes"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.ini", env={})


class TestOverrides:
    """Environment and command-line precedence."""

    def test_environment_seed(self):
        config = load_config(None, env={SEED_ENV: "17"})
        assert config.scenes.seed == config.schedule.seed == 17

    def test_bad_environment_seed(self):
        with pytest.raises(ConfigError):
            load_config(None, env={SEED_ENV: "seventeen"})

    def test_flags_beat_the_file(self, tmp_path):
        path = _write(tmp_path, "[schedule]\nbeta = 0.5\nepochs = 4\n")
        config = load_config(path, env={SEED_ENV: "5"}).with_overrides(
            beta=0.2, seed=9, epochs=None, scenes_dir=tmp_path, dropout=0.1,
        )
        assert config.schedule.beta == 0.2
        assert config.schedule.epochs == 4
        assert config.schedule.seed == 9
        assert config.schedule.dropout_p == 0.1
        assert config.paths.scenes == str(tmp_path)

    def test_digest_tracks_changes(self):
        base = RunConfig()
        assert base.digest() == RunConfig().digest()
        assert base.digest() != base.with_seed(1).digest()
        assert base.digest() != base.with_preset("tiny").digest()

    def test_resolved_keys(self):
        resolved = RunConfig().resolved()
        assert list(resolved) == sorted(resolved)
        assert resolved["model.preset"] == "desk"
        assert resolved["schedule.beta"] == 0.8
        assert "paths.checkpoint" in resolved
