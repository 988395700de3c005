"""Prepared-scene caching module."""
from dcufront.cache.scene_cache import SceneCache

__all__ = ["SceneCache"]
