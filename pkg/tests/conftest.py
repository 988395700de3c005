"""Shared fixtures: a tiny run configuration and small scene datasets."""
from dataclasses import replace

import numpy as np
import pytest

from dcufront.cache.scene_cache import SceneCache
from dcufront.config import RunConfig, load_config
from dcufront.scenes.dataset import SceneDataset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config(tmp_path) -> RunConfig:
    """
    Tiny preset over 8 scenes of 0.2 s (18 STFT frames), one epoch, no dropout.

    Half the scenes are held out so both splits are populated.
    """
    config = load_config(None, env={}).with_preset("tiny")
    config = replace(
        config,
        scenes=replace(config.scenes, num_scenes=8, duration_s=0.2, test_fraction=0.5, seed=3),
        schedule=replace(config.schedule, epochs=1, batch_size=2, dropout_p=0.0, seed=3),
    )
    return config.with_overrides(
        checkpoint=tmp_path / "run.ckpt",
        metrics=tmp_path / "metrics.log",
    ).validate()


@pytest.fixture
def tiny_dataset(tiny_config) -> SceneDataset:
    return SceneDataset.from_config(
        tiny_config.scenes,
        stft_cfg=tiny_config.stft,
        aec_cfg=tiny_config.aec,
        cache=SceneCache(max_size=64),
    )
