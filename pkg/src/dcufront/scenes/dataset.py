"""Deterministic scene corpus with a hash-based train/test split."""
import hashlib
import json
from dataclasses import asdict, replace
from pathlib import Path
from typing import Iterator, List, Optional, Union

import numpy as np

from dcufront.cache.scene_cache import SceneCache
from dcufront.core.errors import ConfigError
from dcufront.core.log import get_logger
from dcufront.core.types import AecConfig, ArrayGeometry, Scene, SceneConfig, StftConfig
from dcufront.scenes.export import directory_digest, list_exported, load_scene, read_sidecar, scene_stem
from dcufront.scenes.simulator import synthesize_scene
from dcufront.scenes.supervision import PreparedScene, prepare_scene

logger = get_logger(__name__)

SPLITS = ("train", "test", "all")


def is_test_index(seed: int, index: int, test_fraction: float = 0.1) -> bool:
    """Held-out membership from sha256("seed:index"), independent of corpus size."""
    digest = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64 < test_fraction


def config_digest(*parts) -> str:
    """sha256 of the JSON form of dataclass configurations."""
    payload = json.dumps([asdict(p) for p in parts], sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


class SceneDataset:
    """
    Scenes either synthesised on the fly from a SceneConfig or read back from
    an export directory.

    Prepared scenes (spectrograms, supervision, baseline features) go
    through a SceneCache, so repeated epochs do not redo the signal chain.

    Example:
        >>> data = SceneDataset.from_config(SceneConfig(num_scenes=20, seed=3))
        >>> for batch in data.batches("train", batch_size=4, epoch=1):
        ...     ...
    """

    def __init__(
        self,
        cfg: SceneConfig,
        stft_cfg: StftConfig = StftConfig(),
        aec_cfg: AecConfig = AecConfig(),
        geometry: ArrayGeometry = ArrayGeometry(),
        cache: Optional[SceneCache] = None,
        directory: Optional[Path] = None,
    ):
        cfg.validate()
        stft_cfg.validate()
        aec_cfg.validate()
        self.cfg = cfg
        self.stft_cfg = stft_cfg
        self.aec_cfg = aec_cfg
        self.geometry = geometry
        self.cache = cache if cache is not None else SceneCache()
        self.directory = directory
        if directory is None:
            self._indices = list(range(cfg.num_scenes))
            self.digest = config_digest(cfg, stft_cfg, aec_cfg, geometry)
        else:
            self._indices = list_exported(directory)
            self.digest = hashlib.sha256(
                (directory_digest(directory) + config_digest(stft_cfg, aec_cfg, geometry)).encode()
            ).hexdigest()

    @classmethod
    def from_config(cls, cfg: SceneConfig, **kwargs) -> "SceneDataset":
        return cls(cfg, **kwargs)

    @classmethod
    def from_directory(
        cls, directory: Union[str, Path], cfg: Optional[SceneConfig] = None, **kwargs
    ) -> "SceneDataset":
        """
        Dataset over an export directory; seed and scene count come from the sidecars.

        Raises:
            ConfigError: the directory holds no exported scenes
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError("paths.scenes", f"{directory} is not a directory")
        indices = list_exported(directory)
        if not indices:
            raise ConfigError("paths.scenes", f"no exported scenes in {directory}")
        seed = int(read_sidecar(directory / f"{scene_stem(indices[0])}.txt").get("seed", 0))
        cfg = replace(cfg or SceneConfig(), seed=seed, num_scenes=len(indices))
        return cls(cfg, directory=directory, **kwargs)

    def __len__(self) -> int:
        return len(self._indices)

    def indices(self, split: str = "all") -> List[int]:
        """
        Scene indices of one split, ascending.

        Raises:
            ConfigError: unknown split name
        """
        if split not in SPLITS:
            raise ConfigError("split", f"expected one of {SPLITS}, got {split!r}")
        if split == "all":
            return list(self._indices)
        wanted = split == "test"
        return [
            i for i in self._indices
            if is_test_index(self.cfg.seed, i, self.cfg.test_fraction) == wanted
        ]

    def scene(self, index: int) -> Scene:
        if self.directory is not None:
            return load_scene(self.directory, index)
        return synthesize_scene(self.cfg, index)

    def stream(self, split: str = "all") -> Iterator[Scene]:
        """Scenes of a split in index order."""
        for index in self.indices(split):
            yield self.scene(index)

    def prepared(self, index: int) -> PreparedScene:
        return self.cache.get_or_prepare(
            self.digest,
            index,
            lambda: prepare_scene(self.scene(index), self.stft_cfg, self.aec_cfg, self.geometry),
        )

    def order(self, split: str, epoch: int, seed: int, shuffle: bool = True) -> List[int]:
        """Visiting order for one epoch, a pure function of (split, epoch, seed)."""
        indices = self.indices(split)
        if not shuffle:
            return indices
        rng = np.random.default_rng([seed, epoch])
        return [indices[i] for i in rng.permutation(len(indices))]

    def batches(
        self,
        split: str,
        batch_size: int,
        epoch: int = 1,
        seed: int = 0,
        shuffle: bool = True,
    ) -> Iterator[List[PreparedScene]]:
        """Prepared scenes grouped into batches in seed-fixed order; the last batch may be short."""
        order = self.order(split, epoch, seed, shuffle)
        for start in range(0, len(order), batch_size):
            yield [self.prepared(i) for i in order[start:start + batch_size]]
        logger.debug("epoch %d %s pass done; cache %s", epoch, split, self.cache.stats())
