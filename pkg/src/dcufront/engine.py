"""Experiment orchestration behind the command-line interface."""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from dcufront.cache.scene_cache import SceneCache
from dcufront.config import ModelPreset, RunConfig
from dcufront.core.errors import CheckpointError, ConfigError, DcufrontError, GeometryError
from dcufront.core.log import get_logger
from dcufront.core.types import ChannelId, EvaluationReport, SystemKind, Waveform
from dcufront.dcunet.model import dcunet_forward
from dcufront.diagnostics import LayerCheck, gradcheck_suite
from dcufront.dsp.stft import istft, stft
from dcufront.dsp.wavio import read_wav, write_wav
from dcufront.scenes.dataset import SceneDataset
from dcufront.scenes.export import directory_digest, export_scenes
from dcufront.systems.base import BaseSystem
from dcufront.systems.factory import build_system, parse_system_kind
from dcufront.training.checkpoint import Checkpoint, load_checkpoint
from dcufront.training.evaluate import evaluate
from dcufront.training.trainer import TrainResult, pretrain_dcunet, train

logger = get_logger(__name__)

PathLike = Union[str, Path]


@dataclass
class SimulationResult:
    directory: Path
    num_scenes: int
    files: List[Path]
    digest: str


class ExperimentEngine:
    """
    Runs one experiment command against a resolved RunConfig.

    Pipeline per command:
    Resolve config → Scenes (synthesised or exported, cached) → System → Train / Evaluate / Enhance

    Example:
        >>> with ExperimentEngine(load_config("desk.ini")) as engine:
        ...     engine.train("mtl")
    """

    def __init__(self, config: RunConfig, cache_size: int = 256):
        """
        Args:
            config: Fully resolved run configuration
            cache_size: Prepared scenes kept in memory
        """
        self.config = config.validate()
        self.cache = SceneCache(max_size=cache_size)

    def __enter__(self) -> "ExperimentEngine":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False

    def close(self):
        logger.debug("scene cache at close: %s", self.cache.stats())
        self.cache.clear()

    def log_config(self, command: str):
        """Log the seed and every resolved setting before a command runs."""
        logger.info("%s: seed=%d config=%s", command, self.config.schedule.seed, self.config.digest()[:12])
        for key, value in self.config.resolved().items():
            logger.info("  %s = %s", key, value)

    def dataset(self) -> SceneDataset:
        """Exported scenes when paths.scenes is set, otherwise scenes synthesised from the seed."""
        kwargs = dict(stft_cfg=self.config.stft, aec_cfg=self.config.aec, cache=self.cache)
        if self.config.paths.scenes:
            return SceneDataset.from_directory(self.config.paths.scenes, self.config.scenes, **kwargs)
        return SceneDataset.from_config(self.config.scenes, **kwargs)

    def _evaluation_split(self, dataset: SceneDataset) -> str:
        return "all" if dataset.directory is not None else "test"

    def _run(self, what: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DcufrontError:
            raise
        except Exception as e:
            raise RuntimeError(f"{what} failed: {e}") from e

    def simulate(self, directory: PathLike) -> SimulationResult:
        """
        Synthesise the configured corpus and export it as WAV triples with sidecars.

        Raises:
            ConfigError: the scene configuration is invalid
        """
        directory = Path(directory)

        def run() -> SimulationResult:
            dataset = SceneDataset.from_config(self.config.scenes, stft_cfg=self.config.stft, cache=self.cache)
            files = export_scenes(dataset.stream("all"), directory, self.config.scenes.seed)
            return SimulationResult(directory, len(dataset), files, directory_digest(directory))

        return self._run("simulation", run)

    def _metadata(self, **extra) -> Dict:
        meta = {
            "preset": self.config.model.name,
            "model": self.config.model.settings(),
            "beta": self.config.schedule.beta,
            "t_enh": self.config.schedule.t_enh,
            "dropout_p": self.config.schedule.dropout_p,
        }
        meta.update({k: v for k, v in extra.items() if v is not None})
        return meta

    def pretrain(self, checkpoint_path: Optional[PathLike] = None) -> TrainResult:
        """Train a stand-alone DCUnet on the enhancement loss and save it."""
        path = checkpoint_path or self.config.paths.checkpoint

        def run() -> TrainResult:
            system = build_system(SystemKind.DCUNET, self.config)
            return pretrain_dcunet(
                system,
                self.dataset(),
                self.config.schedule,
                config_digest=self.config.digest(),
                checkpoint_path=path,
                metrics_path=self.config.paths.metrics,
                extra_metadata=self._metadata(),
            )

        return self._run("pretraining", run)

    def load_init_source(self, system: BaseSystem, source: PathLike) -> Checkpoint:
        """
        Copy a pretrained DCUnet checkpoint into the system's DCUnet.

        Raises:
            CheckpointError: the checkpoint is unreadable or not a DCUnet checkpoint
            ConfigError: the system has no DCUnet
            ParameterMismatchError: the DCUnet layouts differ
        """
        checkpoint = load_checkpoint(source)
        if checkpoint.system is not SystemKind.DCUNET:
            raise CheckpointError(
                f"{source} holds a {checkpoint.system.value} system; --init-from needs a dcunet checkpoint"
            )
        loaded = system.init_from(checkpoint.state)
        logger.info("initialised %d DCUnet tensors from %s", len(loaded), source)
        return checkpoint

    def train(self, system: Union[str, SystemKind], checkpoint_path: Optional[PathLike] = None) -> TrainResult:
        """
        Train one of baseline, nnfb, cascade or mtl.

        With schedule.init_source set the DCUnet starts from that checkpoint;
        its recorded final L_enh is logged next to the initial L_enh of this run.
        """
        kind = parse_system_kind(system)
        if kind is SystemKind.DCUNET:
            raise ConfigError("system", "use pretrain for a stand-alone DCUnet")
        path = checkpoint_path or self.config.paths.checkpoint
        source = self.config.schedule.init_source

        def run() -> TrainResult:
            model = build_system(kind, self.config)
            pretrained = self.load_init_source(model, source) if source else None
            result = train(
                model,
                self.dataset(),
                self.config.schedule,
                config_digest=self.config.digest(),
                checkpoint_path=path,
                metrics_path=self.config.paths.metrics,
                extra_metadata=self._metadata(init_source=str(source) if source else None),
            )
            if pretrained is not None and result.initial_l_enh is not None:
                logger.info(
                    "L_enh after pretraining %s, at the start of %s training %.6f",
                    pretrained.metadata.get("final_l_enh", "-"), kind.value, result.initial_l_enh,
                )
            return result

        return self._run("training", run)

    def restore(self, checkpoint: Checkpoint) -> BaseSystem:
        """
        Rebuild the checkpoint's system and load its parameters strictly.

        The model recorded in the checkpoint (preset plus `[model]` settings)
        wins over the configured one.

        Raises:
            ConfigError: the recorded model settings are unknown
            ParameterMismatchError: the checkpoint does not fit the rebuilt system
        """
        config = self.config
        preset = checkpoint.metadata.get("preset")
        if preset:
            model = ModelPreset.from_settings(preset, checkpoint.metadata.get("model", {}))
            if model != config.model:
                logger.warning("checkpoint was trained with a different %s model; rebuilding it from the checkpoint", preset)
            config = config.with_model(model)
        system = build_system(checkpoint.system, config)
        system.checkpoint_module().load_state_dict(checkpoint.state, strict=True)
        system.eval()
        return system

    def evaluate(self, checkpoint_path: PathLike) -> EvaluationReport:
        """
        Per-bucket report of a trained checkpoint on the held-out scenes.

        Exported scene directories are evaluated whole.

        Raises:
            CheckpointError: the checkpoint is missing or invalid
            ConfigError: there are no scenes to evaluate
        """
        checkpoint = load_checkpoint(checkpoint_path)

        def run() -> EvaluationReport:
            system = self.restore(checkpoint)
            dataset = self.dataset()
            return evaluate(system, dataset, self._evaluation_split(dataset), self.config.schedule.batch_size)

        return self._run("evaluation", run)

    def enhance(
        self,
        checkpoint_path: PathLike,
        mic1: PathLike,
        mic2: PathLike,
        reference: PathLike,
        output: PathLike,
    ) -> Waveform:
        """
        Enhance one utterance with the DCUnet of a checkpoint and write it as WAV.

        The output has as many samples as the inputs; samples past the last
        full analysis frame are zero.

        Raises:
            CheckpointError: the checkpoint has no DCUnet
            GeometryError: the three inputs differ in length
        """
        checkpoint = load_checkpoint(checkpoint_path)
        if not checkpoint.system.has_enhancement_head:
            raise CheckpointError(f"{checkpoint_path} holds a {checkpoint.system.value} system without a DCUnet")
        channels = [
            read_wav(mic1, ChannelId.MIC1),
            read_wav(mic2, ChannelId.MIC2),
            read_wav(reference, ChannelId.REFERENCE),
        ]
        lengths = [w.num_samples for w in channels]
        if len(set(lengths)) != 1:
            raise GeometryError(f"input lengths differ: mic1 {lengths[0]}, mic2 {lengths[1]}, reference {lengths[2]}")

        def run() -> Waveform:
            system = self.restore(checkpoint)
            specs = [stft(w, self.config.stft) for w in channels]
            enhanced = istft(dcunet_forward(system.dcunet, *specs))
            samples = np.zeros(lengths[0])
            count = min(lengths[0], enhanced.num_samples)
            samples[:count] = enhanced.samples[:count]
            waveform = Waveform(samples, enhanced.sample_rate, ChannelId.MONO)
            write_wav(output, waveform)
            logger.info("wrote %s (%.2f s)", output, waveform.duration_s)
            return waveform

        return self._run("enhancement", run)

    def gradcheck(self, tolerance: float = 1e-4, max_entries: int = 6) -> List[LayerCheck]:
        """Gradient-check every layer type with the configured model preset."""
        return self._run(
            "gradient check",
            gradcheck_suite,
            self.config.model,
            tolerance=tolerance,
            seed=self.config.schedule.seed,
            max_entries=max_entries,
        )
