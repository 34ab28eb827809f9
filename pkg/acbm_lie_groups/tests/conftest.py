import json
import sys
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

app_dir = Path(__file__).parent.parent
if str(app_dir) not in sys.path:
    sys.path.insert(0, str(app_dir))

from cache import cache


@pytest.fixture(autouse=True)
def reset_caches() -> None:
    """KR: 캐시와 설정을 초기화합니다. EN: Reset cached settings and oracle products."""
    cache.invalidate_all()
    yield
    cache.invalidate_all()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture()
def algebra_file(tmp_path: Path) -> Callable[..., str]:
    """KR: 임시 대수 파일을 만듭니다. EN: Write a temporary algebra file."""

    def _factory(constants: dict, name: str = "algebra.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps({"C": constants}), encoding="utf-8")
        return str(path)

    return _factory
