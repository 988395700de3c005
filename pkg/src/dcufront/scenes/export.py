"""Scene export to WAV triples with key=value sidecars, and the way back."""
import hashlib
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np

from dcufront.core.errors import ConfigError
from dcufront.core.log import get_logger
from dcufront.core.types import ChannelId, Scene
from dcufront.dsp.wavio import read_wav, write_wav

logger = get_logger(__name__)

PathLike = Union[str, Path]


def scene_stem(index: int) -> str:
    return f"scene_{index:05d}"


def export_scene(scene: Scene, directory: PathLike, seed: int) -> List[Path]:
    """
    Write mic1/mic2/ref WAV files and a metadata sidecar for one scene.

    Returns:
        Paths written (three WAV files, then the sidecar)
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = scene_stem(scene.index)
    written = []
    for suffix, waveform in (("mic1", scene.mic1), ("mic2", scene.mic2), ("ref", scene.reference)):
        path = directory / f"{stem}_{suffix}.wav"
        write_wav(path, waveform)
        written.append(path)
    sidecar = directory / f"{stem}.txt"
    fields = {
        "index": str(scene.index),
        "seed": str(seed),
        "azimuth": repr(float(scene.azimuth)),
        "snr_db": repr(float(scene.snr_db)),
        "has_echo": str(int(scene.has_echo)),
        "labels": " ".join(str(int(v)) for v in scene.frame_labels),
    }
    sidecar.write_text("".join(f"{key}={value}\n" for key, value in fields.items()))
    written.append(sidecar)
    return written


def export_scenes(scenes: Iterable[Scene], directory: PathLike, seed: int) -> List[Path]:
    written: List[Path] = []
    for scene in scenes:
        written.extend(export_scene(scene, directory, seed))
    logger.info("exported %d files to %s", len(written), directory)
    return written


def read_sidecar(path: PathLike) -> Dict[str, str]:
    """
    Parse a key=value sidecar.

    Raises:
        ConfigError: a line is not key=value
    """
    fields = {}
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}", f"expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    return fields


def list_exported(directory: PathLike) -> List[int]:
    """Scene indices present in an export directory, ascending."""
    return sorted(int(read_sidecar(p)["index"]) for p in Path(directory).glob("scene_*.txt"))


def load_scene(directory: PathLike, index: int) -> Scene:
    """Read one exported scene; the clean signal is not part of an export."""
    directory = Path(directory)
    stem = scene_stem(index)
    meta = read_sidecar(directory / f"{stem}.txt")
    labels = meta.get("labels", "")
    return Scene(
        index=int(meta["index"]),
        mic1=read_wav(directory / f"{stem}_mic1.wav", ChannelId.MIC1),
        mic2=read_wav(directory / f"{stem}_mic2.wav", ChannelId.MIC2),
        reference=read_wav(directory / f"{stem}_ref.wav", ChannelId.REFERENCE),
        clean=None,
        azimuth=float(meta["azimuth"]),
        snr_db=float(meta["snr_db"]),
        has_echo=bool(int(meta["has_echo"])),
        frame_labels=np.array([int(v) for v in labels.split()], dtype=np.int64),
    )


def directory_digest(directory: PathLike) -> str:
    """sha256 over the names and bytes of every file in the directory, in name order."""
    digest = hashlib.sha256()
    for path in sorted(Path(directory).iterdir()):
        if path.is_file():
            digest.update(path.name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()
