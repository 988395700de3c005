"""Synthetic two-mic scenes: generation, supervision targets, export and datasets."""
from dcufront.scenes.dataset import SceneDataset, is_test_index
from dcufront.scenes.export import directory_digest, export_scenes, load_scene
from dcufront.scenes.simulator import synthesize_components, synthesize_scene
from dcufront.scenes.supervision import PreparedScene, make_supervision, prepare_scene

__all__ = [
    "PreparedScene",
    "SceneDataset",
    "directory_digest",
    "export_scenes",
    "is_test_index",
    "load_scene",
    "make_supervision",
    "prepare_scene",
    "synthesize_components",
    "synthesize_scene",
]
