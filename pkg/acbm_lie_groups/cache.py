import hashlib
from functools import wraps
from typing import Any, Dict, Optional

from cachetools import LRUCache


class CacheManager:
    """Registry of named LRU caches for deterministic oracle products."""

    def __init__(self):
        self.caches: Dict[str, LRUCache] = {}

    def register(self, name: str, maxsize: int = 32) -> LRUCache:
        if name not in self.caches:
            self.caches[name] = LRUCache(maxsize=maxsize)
        return self.caches[name]

    def get_cached(self, name: str, key: str) -> Optional[Any]:
        store = self.caches.get(name)
        if store is None:
            return None
        return store.get(key)

    def set_cached(self, name: str, key: str, value: Any) -> None:
        self.register(name)[key] = value

    def invalidate(self, name: str) -> None:
        store = self.caches.get(name)
        if store is not None:
            store.clear()

    def invalidate_all(self) -> None:
        for store in self.caches.values():
            store.clear()

    def sizes(self) -> Dict[str, int]:
        """KR: 캐시별 항목 수를 반환합니다. EN: Return the entry count per cache."""
        return {name: len(store) for name, store in self.caches.items()}


cache = CacheManager()


def make_key(func_name: str, args, kwargs) -> str:
    raw = f"{func_name}:{args}:{sorted(kwargs.items())}"
    return hashlib.md5(raw.encode("utf-8")).hexdigest()


def cache_result(name: str, maxsize: int = 32):
    def decorator(func):
        store = cache.register(name, maxsize)

        @wraps(func)
        def wrapper(*args, **kwargs):
            cache_key = make_key(func.__name__, args, kwargs)
            if cache_key in store:
                return store[cache_key]
            result = func(*args, **kwargs)
            store[cache_key] = result
            return result

        return wrapper

    return decorator
