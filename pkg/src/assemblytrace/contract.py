"""File-based render contract shared by the built-in rasterizer and the
external Blender adapter.

A request file lists mesh paths, the uniform scale, view ids, canvas
settings, and output paths. Either backend consumes the same file and
produces one image per (state, view), reporting a ``RenderResult`` each.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .mesh import load_mesh
from .raster import (
    VIEW_IDS,
    ComposedState,
    RenderSettings,
    fit_cameras,
    render,
)

CONTRACT_VERSION = 1


@dataclass(frozen=True)
class StateRequest:
    state_id: str
    mesh_paths: tuple[str, ...]
    outputs: dict[str, str]  # view id -> output image path

    def to_dict(self) -> dict:
        return {
            "state_id": self.state_id,
            "mesh_paths": list(self.mesh_paths),
            "outputs": dict(self.outputs),
        }


@dataclass(frozen=True)
class RenderRequest:
    states: tuple[StateRequest, ...]
    scale: float = 3.0
    settings: RenderSettings = field(default_factory=RenderSettings)

    def to_dict(self) -> dict:
        return {
            "version": CONTRACT_VERSION,
            "scale": self.scale,
            "settings": self.settings.to_dict(),
            "states": [s.to_dict() for s in self.states],
        }


@dataclass(frozen=True)
class RenderResult:
    state_id: str
    view_id: str
    output_path: str
    ok: bool
    log: str = ""

    def to_dict(self) -> dict:
        return {
            "state_id": self.state_id,
            "view_id": self.view_id,
            "output_path": self.output_path,
            "ok": self.ok,
            "log": self.log,
        }


def write_request(request: RenderRequest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(request.to_dict(), indent=2, sort_keys=True))


def read_request(path: str | Path) -> RenderRequest:
    raw = json.loads(Path(path).read_text())
    if raw.get("version") != CONTRACT_VERSION:
        raise ConfigError(f"unsupported render request version {raw.get('version')!r}")
    states = []
    for s in raw["states"]:
        outputs = dict(s["outputs"])
        for view in outputs:
            if view not in VIEW_IDS:
                raise ConfigError(f"unknown view id {view!r} in state {s['state_id']!r}")
        states.append(
            StateRequest(
                state_id=str(s["state_id"]),
                mesh_paths=tuple(str(p) for p in s["mesh_paths"]),
                outputs=outputs,
            )
        )
    return RenderRequest(
        states=tuple(states),
        scale=float(raw["scale"]),
        settings=RenderSettings.from_dict(raw["settings"]),
    )


def run_builtin(request: RenderRequest) -> list[RenderResult]:
    """Execute a render request with the built-in rasterizer.

    The camera fit covers the union of all states in the request so every
    state of a trace renders at the same scale. Per-state failures are
    recorded in the results; the batch continues.
    """
    import numpy as np

    # Fit once over everything the request will ever show.
    all_meshes = []
    loaded: dict[str, object] = {}
    mesh_errors: dict[str, str] = {}
    for state in request.states:
        for p in state.mesh_paths:
            if p in loaded or p in mesh_errors:
                continue
            try:
                loaded[p] = load_mesh(p).scaled(request.scale)
            except Exception as exc:  # recorded per state below
                mesh_errors[p] = str(exc)
    all_meshes = list(loaded.values())
    if all_meshes:
        union = ComposedState(step=0, meshes=tuple(all_meshes))
        bounds = union.bounds()
    else:
        bounds = (np.zeros(3), np.zeros(3))
    cameras = fit_cameras(bounds, request.settings)

    results: list[RenderResult] = []
    for state in request.states:
        bad = [p for p in state.mesh_paths if p in mesh_errors]
        if bad:
            for view, out in sorted(state.outputs.items()):
                results.append(
                    RenderResult(state.state_id, view, out, ok=False, log=mesh_errors[bad[0]])
                )
            continue
        composed = ComposedState(
            step=0, meshes=tuple(loaded[p] for p in state.mesh_paths)
        )
        for view, out in sorted(state.outputs.items()):
            img = render(composed, cameras[view], request.settings)
            Path(out).parent.mkdir(parents=True, exist_ok=True)
            img.save(out)
            results.append(RenderResult(state.state_id, view, out, ok=True))
    return results


def run_blender(
    request_path: str | Path,
    blender_executable: str = "blender",
    adapter_script: str | Path | None = None,
    timeout: float = 600.0,
) -> list[RenderResult]:
    """Invoke the external Blender adapter on an already-written request file.

    The adapter writes ``<request>.results.json`` next to the request; this
    helper parses it back into ``RenderResult`` rows.
    """
    request_path = Path(request_path)
    if adapter_script is None:
        adapter_script = Path(__file__).resolve().parents[2] / "blender_adapter" / "adapter.py"
    cmd = [
        str(blender_executable),
        "--background",
        "--python",
        str(adapter_script),
        "--",
        str(request_path),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        raise RuntimeError(
            f"blender adapter failed (exit {proc.returncode}): {proc.stderr[-2000:]}"
        )
    results_path = request_path.with_suffix(request_path.suffix + ".results.json")
    raw = json.loads(results_path.read_text())
    return [
        RenderResult(
            state_id=r["state_id"],
            view_id=r["view_id"],
            output_path=r["output_path"],
            ok=bool(r["ok"]),
            log=r.get("log", ""),
        )
        for r in raw
    ]
