"""Golden structure checks against a real Blender install.

These run only when a ``blender`` executable is on PATH. They check
structure (dimensions, alpha background, nonzero foreground), never pixel
values: Eevee output is not bit-stable across versions.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

import adapter
from test_request_handling import write_cube_obj, write_request

BLENDER = shutil.which("blender")

pytestmark = pytest.mark.skipif(BLENDER is None, reason="blender executable not available")

ADAPTER = Path(adapter.__file__).resolve()


def run_blender(request_file):
    proc = subprocess.run(
        [BLENDER, "--background", "--python", str(ADAPTER), "--", str(request_file)],
        capture_output=True,
        text=True,
        timeout=600,
    )
    assert proc.returncode == 0, proc.stderr[-2000:]
    return json.loads(adapter.results_path_for(request_file).read_text())


def load_rgba(path):
    from PIL import Image
    import numpy as np

    img = Image.open(path)
    assert img.mode == "RGBA"
    return np.asarray(img)


def test_unit_cube_request(tmp_path):
    cube = write_cube_obj(tmp_path / "cube.obj")
    out = tmp_path / "front.png"
    request_file = write_request(
        tmp_path / "request.json",
        [{"state_id": "s1", "mesh_paths": [str(cube)], "outputs": {"front": str(out)}}],
    )
    results = run_blender(request_file)
    assert all(r["ok"] for r in results)
    arr = load_rgba(out)
    assert arr.shape == (512, 512, 4)
    alpha = arr[:, :, 3]
    for corner in ((0, 0), (0, -1), (-1, 0), (-1, -1)):
        assert alpha[corner] == 0  # transparent background
    assert (alpha > 128).sum() > 0  # nonzero foreground


def test_empty_request_fully_transparent(tmp_path):
    out = tmp_path / "empty.png"
    request_file = write_request(
        tmp_path / "request.json",
        [{"state_id": "empty", "mesh_paths": [], "outputs": {"front": str(out)}}],
    )
    results = run_blender(request_file)
    assert all(r["ok"] for r in results)
    alpha = load_rgba(out)[:, :, 3]
    assert int(alpha.max()) == 0


def test_four_views_one_result_each(tmp_path):
    cube = write_cube_obj(tmp_path / "cube.obj")
    outputs = {view: str(tmp_path / f"{view}.png") for view in adapter.VIEW_IDS}
    request_file = write_request(
        tmp_path / "request.json",
        [{"state_id": "s1", "mesh_paths": [str(cube)], "outputs": outputs}],
    )
    results = run_blender(request_file)
    assert sorted(r["view_id"] for r in results) == sorted(adapter.VIEW_IDS)
    for path in outputs.values():
        assert load_rgba(path).shape == (512, 512, 4)
