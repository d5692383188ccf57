"""Headless Blender backend for the render-contract request files.

Invocation:

    blender --background --python adapter.py -- <request_file>

The script reads the JSON request (mesh paths, uniform scale, views, canvas
settings, output paths), renders every (state, view) pair with Eevee under
the fixed four-view camera rig, and writes ``<request_file>.results.json``
with one row per render. Per-state failures are recorded and the batch
continues; only launch/parse failures exit nonzero.

Everything except the ``BlenderSession`` class is pure stdlib and runs (and
is tested) outside Blender.
"""

from __future__ import annotations

import json
import math
import sys
import traceback
from pathlib import Path

try:
    import bpy  # only available inside Blender
except ImportError:
    bpy = None

CONTRACT_VERSION = 1
VIEW_IDS = ("front", "left", "right", "back")
FILL_FRACTION = 0.8
GRAY = (0.8, 0.8, 0.8, 1.0)
LIGHT_ELEVATION_DEG = 45.0
CLEANUP_EVERY_STATES = 8

# Camera sits opposite the axis it looks along; +Z up. Euler X=90 deg points
# the camera horizontally, the Z angle selects the view.
VIEW_Z_ANGLE = {
    "front": 0.0,
    "left": -math.pi / 2.0,
    "right": math.pi / 2.0,
    "back": math.pi,
}
VIEW_OFFSET = {
    "front": (0.0, -1.0, 0.0),
    "left": (-1.0, 0.0, 0.0),
    "right": (1.0, 0.0, 0.0),
    "back": (0.0, 1.0, 0.0),
}


class RequestError(ValueError):
    pass


def read_request(path):
    """Parse and validate a render request file into plain dicts."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RequestError(f"cannot read request {path}: {exc}")
    if raw.get("version") != CONTRACT_VERSION:
        raise RequestError(f"unsupported request version {raw.get('version')!r}")
    settings = raw.get("settings", {})
    for key in ("width", "height", "samples"):
        if not isinstance(settings.get(key), int) or settings[key] < 1:
            raise RequestError(f"settings.{key} must be a positive integer")
    states = raw.get("states")
    if not isinstance(states, list):
        raise RequestError("states must be a list")
    for state in states:
        if not state.get("state_id"):
            raise RequestError("every state needs a state_id")
        outputs = state.get("outputs", {})
        if not isinstance(outputs, dict) or not outputs:
            raise RequestError(f"state {state['state_id']!r} has no outputs")
        for view in outputs:
            if view not in VIEW_IDS:
                raise RequestError(f"unknown view id {view!r}")
        if not isinstance(state.get("mesh_paths"), list):
            raise RequestError(f"state {state['state_id']!r} mesh_paths must be a list")
    return {
        "scale": float(raw.get("scale", 1.0)),
        "settings": settings,
        "states": states,
    }


def obj_bounds(path):
    """(min_corner, max_corner) over the vertex lines of an OBJ file."""
    lo = [math.inf] * 3
    hi = [-math.inf] * 3
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line in fh:
            if not line.startswith("v "):
                continue
            parts = line.split()
            if len(parts) < 4:
                raise RequestError(f"malformed vertex line in {path}")
            for axis in range(3):
                value = float(parts[axis + 1])
                lo[axis] = min(lo[axis], value)
                hi[axis] = max(hi[axis], value)
    if lo[0] is math.inf:
        return None
    return lo, hi


def union_bounds(mesh_paths, scale):
    """Scaled union bounding box over every referenced mesh (None if empty).

    Unreadable meshes are skipped here; they fail their own state later,
    where the error is recorded without aborting the batch.
    """
    lo = [math.inf] * 3
    hi = [-math.inf] * 3
    seen = False
    for path in mesh_paths:
        try:
            bounds = obj_bounds(path)
        except (OSError, ValueError, RequestError):
            continue
        if bounds is None:
            continue
        seen = True
        for axis in range(3):
            lo[axis] = min(lo[axis], bounds[0][axis] * scale)
            hi[axis] = max(hi[axis], bounds[1][axis] * scale)
    return (lo, hi) if seen else None


def camera_rig(bounds, width, height, fill=FILL_FRACTION):
    """Per-view camera placement sharing one orthographic extent.

    Mirrors the built-in rasterizer's fit: the final assembly's bounding box
    fills ``fill`` of the canvas in its limiting dimension, and the same
    extent serves every state so intermediate renders keep a constant scale.
    """
    if bounds is None:
        center = (0.0, 0.0, 0.0)
        span = (1.0, 1.0, 1.0)
    else:
        lo, hi = bounds
        center = tuple((lo[i] + hi[i]) / 2.0 for i in range(3))
        span = tuple(hi[i] - lo[i] for i in range(3))
    aspect = width / height
    horiz = max(span[0], span[1])
    vert = span[2]
    half = max(vert / 2.0, horiz / (2.0 * aspect)) / fill
    if half <= 0.0:
        half = 1.0
    distance = math.sqrt(sum(s * s for s in span)) + 1.0

    rig = {}
    for view in VIEW_IDS:
        ox, oy, oz = VIEW_OFFSET[view]
        rig[view] = {
            "location": (
                center[0] + ox * distance,
                center[1] + oy * distance,
                center[2] + oz * distance,
            ),
            "rotation_euler": (math.pi / 2.0, 0.0, VIEW_Z_ANGLE[view]),
            # Blender's ortho_scale is the full extent of the larger canvas axis.
            "ortho_scale": 2.0 * half * max(aspect, 1.0),
            "clip_end": 4.0 * distance + 10.0,
        }
    return rig


class BlenderSession:
    """Thin wrapper over the bpy calls the adapter needs."""

    def __init__(self, width, height, samples):
        self.width = width
        self.height = height
        self.samples = samples
        self._states_since_cleanup = 0

    def configure_scene(self):
        bpy.ops.wm.read_factory_settings(use_empty=True)
        scene = bpy.context.scene
        try:
            scene.render.engine = "BLENDER_EEVEE_NEXT"
        except TypeError:
            scene.render.engine = "BLENDER_EEVEE"
        scene.render.resolution_x = self.width
        scene.render.resolution_y = self.height
        scene.render.resolution_percentage = 100
        scene.render.film_transparent = True
        scene.render.image_settings.file_format = "PNG"
        scene.render.image_settings.color_mode = "RGBA"
        scene.eevee.taa_render_samples = self.samples

    def make_material(self):
        material = bpy.data.materials.new("uniform_gray")
        material.use_nodes = True
        bsdf = material.node_tree.nodes["Principled BSDF"]
        bsdf.inputs["Base Color"].default_value = GRAY
        bsdf.inputs["Roughness"].default_value = 0.9
        return material

    def add_key_light(self, center, distance):
        light_data = bpy.data.lights.new("key_light", type="SUN")
        light_data.energy = 3.0
        light = bpy.data.objects.new("key_light", light_data)
        bpy.context.scene.collection.objects.link(light)
        elevation = math.radians(LIGHT_ELEVATION_DEG)
        light.rotation_euler = (math.pi / 2.0 - elevation, 0.0, math.radians(45.0))
        light.location = (center[0], center[1] - distance, center[2] + distance)
        return light

    def add_camera(self):
        camera_data = bpy.data.cameras.new("contract_camera")
        camera_data.type = "ORTHO"
        camera = bpy.data.objects.new("contract_camera", camera_data)
        bpy.context.scene.collection.objects.link(camera)
        bpy.context.scene.camera = camera
        return camera

    def import_state_meshes(self, mesh_paths, scale, material):
        imported = []
        for path in mesh_paths:
            before = set(bpy.data.objects)
            if hasattr(bpy.ops.wm, "obj_import"):
                bpy.ops.wm.obj_import(filepath=str(path))
            else:
                bpy.ops.import_scene.obj(filepath=str(path))
            for obj in set(bpy.data.objects) - before:
                obj.scale = (scale, scale, scale)
                if obj.data and hasattr(obj.data, "materials"):
                    obj.data.materials.clear()
                    obj.data.materials.append(material)
                imported.append(obj)
        return imported

    def place_camera(self, camera, pose):
        camera.location = pose["location"]
        camera.rotation_euler = pose["rotation_euler"]
        camera.data.ortho_scale = pose["ortho_scale"]
        camera.data.clip_end = pose["clip_end"]

    def render_to(self, output_path):
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        bpy.context.scene.render.filepath = str(output_path)
        bpy.ops.render.render(write_still=True)

    def remove_objects(self, objects):
        for obj in objects:
            bpy.data.objects.remove(obj, do_unlink=True)
        self._states_since_cleanup += 1
        if self._states_since_cleanup >= CLEANUP_EVERY_STATES:
            self.purge_orphans()
            self._states_since_cleanup = 0

    def purge_orphans(self):
        # Orphaned data blocks accumulate across imports; drop them so long
        # batches keep a flat memory profile.
        for collection in (bpy.data.meshes, bpy.data.materials, bpy.data.images):
            for block in list(collection):
                if block.users == 0:
                    collection.remove(block)


def run_request(request, session):
    """Render every (state, view) pair; returns result rows."""
    all_paths = sorted({p for state in request["states"] for p in state["mesh_paths"]})
    bounds = union_bounds(all_paths, request["scale"])
    rig = camera_rig(
        bounds, request["settings"]["width"], request["settings"]["height"]
    )

    session.configure_scene()
    material = session.make_material()
    if bounds is not None:
        lo, hi = bounds
        center = tuple((lo[i] + hi[i]) / 2.0 for i in range(3))
        span = math.sqrt(sum((hi[i] - lo[i]) ** 2 for i in range(3)))
    else:
        center, span = (0.0, 0.0, 0.0), 1.0
    session.add_key_light(center, span + 1.0)
    camera = session.add_camera()

    results = []
    for state in request["states"]:
        imported = []
        state_error = None
        try:
            imported = session.import_state_meshes(
                state["mesh_paths"], request["scale"], material
            )
        except Exception as exc:
            state_error = f"import failed: {exc}"

        for view, output in sorted(state["outputs"].items()):
            if state_error is not None:
                results.append(_row(state, view, output, False, state_error))
                continue
            try:
                session.place_camera(camera, rig[view])
                session.render_to(output)
                results.append(_row(state, view, output, True, ""))
            except Exception as exc:
                results.append(_row(state, view, output, False, f"render failed: {exc}"))

        session.remove_objects(imported)
    return results


def _row(state, view, output, ok, log):
    return {
        "state_id": state["state_id"],
        "view_id": view,
        "output_path": str(output),
        "ok": bool(ok),
        "log": log[-500:],
    }


def results_path_for(request_path):
    request_path = Path(request_path)
    return request_path.with_suffix(request_path.suffix + ".results.json")


def main(argv):
    # Blender passes everything after "--" to the script.
    if "--" in argv:
        argv = argv[argv.index("--") + 1:]
    if len(argv) != 1:
        print("usage: blender --background --python adapter.py -- <request_file>",
              file=sys.stderr)
        return 2
    if bpy is None:
        print("bpy unavailable: run this script inside blender --background",
              file=sys.stderr)
        return 2
    try:
        request = read_request(argv[0])
        results = run_request(request, BlenderSession(
            request["settings"]["width"],
            request["settings"]["height"],
            request["settings"]["samples"],
        ))
    except RequestError as exc:
        print(f"request error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1
    results_path_for(argv[0]).write_text(json.dumps(results, indent=2, sort_keys=True))
    failed = sum(1 for r in results if not r["ok"])
    print(f"adapter: {len(results) - failed}/{len(results)} renders ok")
    return 0


if __name__ == "__main__":
    code = main(sys.argv)
    if code != 0:
        sys.exit(code)
