"""LRU cache of prepared scenes."""
from typing import TYPE_CHECKING, Any, Callable, Dict, Optional, Tuple

from cachetools import LRUCache

from dcufront.core.log import get_logger

if TYPE_CHECKING:
    from dcufront.scenes.supervision import PreparedScene

logger = get_logger(__name__)

CacheKey = Tuple[str, int]


class _CountingLRU(LRUCache):
    """LRUCache that counts evictions."""

    def __init__(self, maxsize: int):
        super().__init__(maxsize=maxsize)
        self.evictions = 0

    def popitem(self):
        key, value = super().popitem()
        self.evictions += 1
        return key, value


class SceneCache:
    """
    LRU cache for prepared scenes, keyed by (config digest, scene index).

    A prepared scene is a pure function of its configuration and index, so
    entries never go stale; the only policy is least-recently-used eviction.

    Example:
        >>> cache = SceneCache(max_size=256)
        >>> prepared = cache.get_or_prepare(digest, 7, lambda: prepare_scene(scene))
    """

    def __init__(self, max_size: int = 256):
        """
        Args:
            max_size: Maximum number of prepared scenes kept in memory
        """
        self.max_size = max_size
        self.cache = _CountingLRU(max_size)
        self.hits = 0
        self.misses = 0

    def get(self, digest: str, index: int) -> Optional["PreparedScene"]:
        """
        Look up a prepared scene.

        Returns:
            The cached PreparedScene, or None on a miss
        """
        entry = self.cache.get((digest, index))
        if entry is None:
            self.misses += 1
            return None
        self.hits += 1
        return entry

    def put(self, digest: str, index: int, prepared: "PreparedScene"):
        self.cache[(digest, index)] = prepared

    def get_or_prepare(self, digest: str, index: int, prepare: Callable[[], "PreparedScene"]) -> "PreparedScene":
        """Return the cached scene or build, store and return it."""
        prepared = self.get(digest, index)
        if prepared is None:
            prepared = prepare()
            self.put(digest, index, prepared)
            logger.debug("cache miss for scene %d (size %d)", index, len(self.cache))
        return prepared

    def clear(self):
        """Clear all entries and statistics."""
        self.cache.clear()
        self.cache.evictions = 0
        self.hits = 0
        self.misses = 0

    def stats(self) -> Dict[str, Any]:
        """
        Get cache statistics.

        Returns:
            Dict with size, hit/miss counts, hit rate and evictions
        """
        total_requests = self.hits + self.misses
        hit_rate = self.hits / total_requests if total_requests > 0 else 0.0
        return {
            "size": len(self.cache),
            "max_size": self.max_size,
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": hit_rate,
            "evictions": self.cache.evictions,
            "total_requests": total_requests,
        }
