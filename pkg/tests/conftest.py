"""Shared fixtures: on-disk toy assets with real OBJ geometry."""

from __future__ import annotations

from pathlib import Path

import pytest

from asset_fixtures import toy_chair_hierarchy, write_sample


@pytest.fixture
def toy_chair_dir(tmp_path: Path) -> Path:
    """An asset root holding one valid toy chair sample."""
    node, objs, boxes = toy_chair_hierarchy()
    write_sample(tmp_path, "chair_0001", "1001", "Chair", "a1", node, objs, boxes)
    return tmp_path


@pytest.fixture
def toy_chair_asset(toy_chair_dir: Path):
    from assemblytrace.assets import parse_hierarchy, scan_and_dedup

    metas = scan_and_dedup(toy_chair_dir)
    assert len(metas) == 1
    return parse_hierarchy(metas[0])
