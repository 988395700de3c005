"""Run configuration: defaults, INI files, environment and command-line overrides."""
import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from dcufront.backend.acoustic_model import BackendConfig
from dcufront.core.errors import ConfigError
from dcufront.core.types import AecConfig, SceneConfig, StftConfig, TrainSchedule
from dcufront.dcunet.model import DcunetConfig

SEED_ENV = "DCUFRONT_SEED"
SECTIONS = ("scenes", "schedule", "model", "stft", "aec", "paths")


@dataclass(frozen=True)
class ModelPreset:
    """Network dimensions shared by every system built from one run."""
    name: str = "desk"
    dcunet: DcunetConfig = DcunetConfig()
    backend: BackendConfig = BackendConfig.desk()
    nnfb_context: int = 5
    diagonal_loading: float = 1e-2

    @classmethod
    def named(cls, name: str) -> "ModelPreset":
        """
        Raises:
            ConfigError: unknown preset name
        """
        if name == "desk":
            return cls()
        if name == "full":
            return cls(name="full", backend=BackendConfig.full())
        if name == "tiny":
            return cls(name="tiny", dcunet=DcunetConfig.tiny(), backend=BackendConfig.tiny())
        raise ConfigError("model.preset", f"expected desk, full or tiny, got {name!r}")

    @property
    def num_classes(self) -> int:
        return self.backend.num_classes

    def settings(self) -> Dict[str, Any]:
        """The `[model]` keys with JSON-friendly values, for checkpoint metadata."""
        items: Dict[str, Any] = {}
        for key, (part, attr) in _MODEL_KEYS.items():
            value = getattr(self if part is None else getattr(self, part), attr)
            items[key] = list(value) if isinstance(value, tuple) else value
        return items

    @classmethod
    def from_settings(cls, name: str, items: Mapping[str, Any]) -> "ModelPreset":
        """
        Rebuild a preset with the `[model]` values recorded by `settings`.

        Raises:
            ConfigError: unknown preset name or key
        """
        model = cls.named(name)
        for key, value in items.items():
            model = _set_model_key(model, key, tuple(value) if isinstance(value, list) else value)
        return model


@dataclass
class PathsConfig:
    scenes: Optional[str] = None
    checkpoint: str = "dcufront.ckpt"
    metrics: str = "metrics.log"


# [model] keys and the sub-config attribute each one sets.
_MODEL_KEYS = {
    "encoder_channels": ("dcunet", "encoder_channels"),
    "leaky_slope": ("dcunet", "leaky_slope"),
    "tdnn_layers": ("backend", "tdnn_layers"),
    "hidden": ("backend", "hidden"),
    "tdnn_context": ("backend", "context"),
    "tdnn_dilation": ("backend", "dilation"),
    "nnfb_context": (None, "nnfb_context"),
    "diagonal_loading": (None, "diagonal_loading"),
}


@dataclass
class RunConfig:
    """
    Everything one command needs, fully resolved.

    Precedence, lowest first: built-in defaults, config file, environment
    (DCUFRONT_SEED), command-line flags.
    """
    scenes: SceneConfig = field(default_factory=SceneConfig)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    model: ModelPreset = field(default_factory=ModelPreset)
    stft: StftConfig = field(default_factory=StftConfig)
    aec: AecConfig = field(default_factory=AecConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def validate(self) -> "RunConfig":
        """
        Raises:
            ConfigError: any section is invalid, or the class counts disagree
        """
        self.scenes.validate()
        self.schedule.validate()
        self.stft.validate()
        self.aec.validate()
        if self.scenes.num_classes != self.model.num_classes:
            raise ConfigError(
                "scenes.num_classes",
                f"{self.scenes.num_classes} classes but the {self.model.name} model predicts "
                f"{self.model.num_classes}",
            )
        return self

    def with_preset(self, name: str) -> "RunConfig":
        """Switch model preset; the scene class inventory follows the preset."""
        return self.with_model(ModelPreset.named(name))

    def with_model(self, model: ModelPreset) -> "RunConfig":
        return replace(self, model=model, scenes=replace(self.scenes, num_classes=model.num_classes))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(
            self,
            scenes=replace(self.scenes, seed=seed),
            schedule=replace(self.schedule, seed=seed),
        )

    def with_overrides(self, **flags: Any) -> "RunConfig":
        """
        Apply command-line flags; None means "not given".

        Recognised: preset, seed, beta, t_enh, dropout, epochs, batch_size,
        learning_rate, init_from, num_scenes, scenes_dir, checkpoint, metrics.
        """
        config = self
        if flags.get("preset") is not None:
            config = config.with_preset(flags["preset"])
        if flags.get("seed") is not None:
            config = config.with_seed(int(flags["seed"]))
        schedule_flags = {
            "beta": "beta",
            "t_enh": "t_enh",
            "dropout": "dropout_p",
            "epochs": "epochs",
            "batch_size": "batch_size",
            "learning_rate": "learning_rate",
            "init_from": "init_source",
        }
        updates = {attr: flags[key] for key, attr in schedule_flags.items() if flags.get(key) is not None}
        if updates:
            config = replace(config, schedule=replace(config.schedule, **updates))
        if flags.get("num_scenes") is not None:
            config = replace(config, scenes=replace(config.scenes, num_scenes=int(flags["num_scenes"])))
        path_flags = {"scenes_dir": "scenes", "checkpoint": "checkpoint", "metrics": "metrics"}
        updates = {attr: str(flags[key]) for key, attr in path_flags.items() if flags.get(key) is not None}
        if updates:
            config = replace(config, paths=replace(config.paths, **updates))
        return config

    def resolved(self) -> Dict[str, Any]:
        """Flat `section.key -> value` mapping, sorted by key."""
        flat: Dict[str, Any] = {}
        for section in ("scenes", "schedule", "stft", "aec", "paths"):
            for key, value in _dataclass_items(getattr(self, section)):
                flat[f"{section}.{key}"] = value
        flat["model.preset"] = self.model.name
        for key, (part, attr) in _MODEL_KEYS.items():
            owner = self.model if part is None else getattr(self.model, part)
            flat[f"model.{key}"] = getattr(owner, attr)
        flat["model.num_classes"] = self.model.num_classes
        return dict(sorted(flat.items()))

    def digest(self) -> str:
        payload = json.dumps(self.resolved(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()


def _dataclass_items(obj) -> Tuple[Tuple[str, Any], ...]:
    return tuple((f.name, getattr(obj, f.name)) for f in fields(obj))


def _coerce(key: str, raw: str, current: Any) -> Any:
    """Parse `raw` into the type of the value it replaces."""
    text = raw.strip()
    try:
        if isinstance(current, bool):
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, tuple):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            element = type(current[0]) if current else float
            if element is int:
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        if current is None:
            return None if text.lower() in ("", "none") else text
        return text
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {type(current).__name__}") from None


def _apply_section(obj, section: str, items: Mapping[str, str]):
    known = {f.name for f in fields(obj)}
    updates = {}
    for key, raw in items.items():
        if key not in known:
            raise ConfigError(f"{section}.{key}", "unknown key")
        updates[key] = _coerce(f"{section}.{key}", raw, getattr(obj, key))
    return replace(obj, **updates)


def _set_model_key(model: ModelPreset, key: str, value: Any) -> ModelPreset:
    if key not in _MODEL_KEYS:
        raise ConfigError(f"model.{key}", "unknown key")
    part, attr = _MODEL_KEYS[key]
    if part is None:
        return replace(model, **{attr: value})
    sub = getattr(model, part)
    sub = sub.with_channels(value) if attr == "encoder_channels" else replace(sub, **{attr: value})
    return replace(model, **{part: sub})


def _apply_model(model: ModelPreset, items: Mapping[str, str]) -> ModelPreset:
    for key, raw in items.items():
        if key == "preset":
            continue
        if key not in _MODEL_KEYS:
            raise ConfigError(f"model.{key}", "unknown key")
        part, attr = _MODEL_KEYS[key]
        current = getattr(model if part is None else getattr(model, part), attr)
        model = _set_model_key(model, key, _coerce(f"model.{key}", raw, current))
    return model


def load_config(
    path: Optional[Union[str, Path]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional INI file and the environment.

    Raises:
        ConfigError: missing file, unknown section or key, unparsable value
    """
    env = os.environ if env is None else env
    config = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("paths.config", f"config file {path} does not exist")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path)
        except configparser.Error as e:
            raise ConfigError("paths.config", f"cannot parse {path}: {e}") from e
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(section, "unknown section")
        if parser.has_option("model", "preset"):
            config = config.with_preset(parser.get("model", "preset").strip())
        for section in parser.sections():
            items = dict(parser.items(section))
            if section == "model":
                config = replace(config, model=_apply_model(config.model, items))
            else:
                config = replace(config, **{section: _apply_section(getattr(config, section), section, items)})
    if env.get(SEED_ENV):
        try:
            config = config.with_seed(int(env[SEED_ENV]))
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env[SEED_ENV]!r}") from None
    return config
