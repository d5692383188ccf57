"""Software rasterizer: cumulative state composition, orthographic rendering,
and foreground masks.

The renderer is deliberately small: z-buffered flat shading, a single key
light, uniform matte gray material, transparent background, box-filter
anti-aliasing. Identical inputs produce bit-identical pixel buffers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .assets import PartHierarchy
from .errors import ConfigError
from .mesh import TriangleMesh, load_mesh
from .schedule import AssemblySchedule

VIEW_IDS = ("front", "left", "right", "back")

# Camera sits on the opposite side of the axis it looks along; +Z is up.
_VIEW_FORWARD = {
    "front": np.array([0.0, 1.0, 0.0]),   # camera on -Y, looking +Y
    "left": np.array([1.0, 0.0, 0.0]),    # camera on -X, looking +X
    "right": np.array([-1.0, 0.0, 0.0]),  # camera on +X, looking -X
    "back": np.array([0.0, -1.0, 0.0]),   # camera on +Y, looking -Y
}
_WORLD_UP = np.array([0.0, 0.0, 1.0])

GRAY_ALBEDO = 0.8
AMBIENT = 0.25
DIFFUSE = 0.75
LIGHT_ELEVATION_DEG = 45.0
LIGHT_AZIMUTH_DEG = 45.0
DEFAULT_FILL_FRACTION = 0.8
DEFAULT_SCALE = 3.0


@dataclass(frozen=True)
class RenderSettings:
    width: int = 512
    height: int = 512
    samples: int = 8  # minimum anti-alias samples per pixel (k*k grid, k*k >= samples)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigError("canvas dimensions must be >= 1")
        if self.samples < 1:
            raise ConfigError("sample count must be >= 1")

    @property
    def supersample(self) -> int:
        return math.isqrt(self.samples - 1) + 1

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "samples": self.samples}

    @classmethod
    def from_dict(cls, d: dict) -> "RenderSettings":
        return cls(width=int(d["width"]), height=int(d["height"]), samples=int(d["samples"]))


@dataclass(frozen=True)
class Camera:
    """One of the four fixed axis views. ``half_extent`` is half the vertical
    world-space size of the orthographic view volume."""

    view_id: str
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    half_extent: float
    kind: str = "orthographic"

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        forward = self.look_at - self.position
        forward = forward / np.linalg.norm(forward)
        right = np.cross(forward, self.up)
        right = right / np.linalg.norm(right)
        true_up = np.cross(right, forward)
        return right, true_up, forward


@dataclass(frozen=True)
class ComposedState:
    """Uniformly scaled meshes of the cumulative part set after ``step`` steps."""

    step: int
    meshes: tuple[TriangleMesh, ...]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.meshes:
            zero = np.zeros(3)
            return zero, zero
        lows = np.stack([m.bounds()[0] for m in self.meshes])
        highs = np.stack([m.bounds()[1] for m in self.meshes])
        return lows.min(axis=0), highs.max(axis=0)

    @property
    def triangle_count(self) -> int:
        return sum(m.triangle_count for m in self.meshes)

    @property
    def vertex_count(self) -> int:
        return sum(m.vertex_count for m in self.meshes)


@dataclass
class RasterImage:
    """RGBA pixel grid, float32 in [0, 1]; alpha 0 marks background."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 4)

    def alpha(self) -> np.ndarray:
        return self.pixels[:, :, 3]

    def to_png_bytes(self) -> bytes:
        import io

        arr = np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(arr, mode="RGBA").save(buf, format="PNG")
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_png_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "RasterImage":
        img = Image.open(path).convert("RGBA")
        arr = np.asarray(img, dtype=np.float32) / 255.0
        return cls(width=img.width, height=img.height, pixels=arr)

    @classmethod
    def blank(cls, width: int, height: int) -> "RasterImage":
        return cls(width, height, np.zeros((height, width, 4), dtype=np.float32))


@dataclass
class BinaryMask:
    width: int
    height: int
    bits: np.ndarray  # (height, width) bool

    @property
    def area(self) -> int:
        return int(self.bits.sum())

    def intersection_area(self, other: "BinaryMask") -> int:
        if (self.width, self.height) != (other.width, other.height):
            from .errors import ShapeError

            raise ShapeError("mask dimensions differ")
        return int((self.bits & other.bits).sum())

    def save(self, path: str | Path) -> None:
        Image.fromarray(self.bits).convert("1").save(path, format="PNG")

    @classmethod
    def load(cls, path: str | Path) -> "BinaryMask":
        img = Image.open(path).convert("1")
        bits = np.asarray(img, dtype=bool)
        return cls(width=img.width, height=img.height, bits=bits)


def compose_state(
    h: PartHierarchy,
    s: AssemblySchedule,
    n: int,
    scale: float = DEFAULT_SCALE,
    loader=load_mesh,
) -> ComposedState:
    """Load and uniformly scale the meshes of all parts assembled by step ``n``."""
    ids = s.cumulative_parts(n)
    meshes: list[TriangleMesh] = []
    for node_id in ids:
        leaf = h.leaf_by_id(node_id)
        for ref in leaf.mesh_refs:
            try:
                meshes.append(loader(ref).scaled(scale))
            except FileNotFoundError:
                raise FileNotFoundError(
                    f"mesh for leaf {leaf.name!r} (id {leaf.node_id}) not found: {ref}"
                )
    return ComposedState(step=n, meshes=tuple(meshes))


def fit_cameras(
    bounds: tuple[np.ndarray, np.ndarray],
    settings: RenderSettings | None = None,
    fill: float = DEFAULT_FILL_FRACTION,
    views: tuple[str, ...] = VIEW_IDS,
) -> dict[str, Camera]:
    """Cameras for the fixed views, sharing one extent fitted to ``bounds``.

    The extent is chosen so the bounding box of the *final* assembly fills
    ``fill`` of the canvas in its limiting dimension; reusing it for every
    step keeps intermediate states at a constant scale.
    """
    settings = settings or RenderSettings()
    low, high = bounds
    center = (np.asarray(low) + np.asarray(high)) / 2.0
    span = np.asarray(high) - np.asarray(low)
    aspect = settings.width / settings.height

    horiz = max(span[0], span[1])  # the four views look along X or Y
    vert = span[2]
    half = max(vert / 2.0, horiz / (2.0 * aspect)) / fill
    if half <= 0.0:
        half = 1.0
    distance = float(np.linalg.norm(span)) + 1.0

    cams = {}
    for view in views:
        forward = _VIEW_FORWARD[view]
        cams[view] = Camera(
            view_id=view,
            position=center - forward * distance,
            look_at=center.copy(),
            up=_WORLD_UP.copy(),
            half_extent=float(half),
        )
    return cams


def _light_direction(right: np.ndarray, up: np.ndarray, forward: np.ndarray) -> np.ndarray:
    el = math.radians(LIGHT_ELEVATION_DEG)
    az = math.radians(LIGHT_AZIMUTH_DEG)
    light = -forward * math.cos(el) * math.cos(az) + right * math.cos(el) * math.sin(az) + up * math.sin(el)
    return light / np.linalg.norm(light)


def render(state: ComposedState, cam: Camera, settings: RenderSettings | None = None) -> RasterImage:
    """Render a composed state under one camera.

    Empty states yield a fully transparent canvas. Pixels covered by no
    triangle keep alpha 0.
    """
    settings = settings or RenderSettings()
    ss = settings.supersample
    W, H = settings.width * ss, settings.height * ss

    color = np.zeros((H, W, 3), dtype=np.float64)
    alpha = np.zeros((H, W), dtype=np.float64)
    depth = np.full((H, W), np.inf, dtype=np.float64)

    right, up, forward = cam.basis()
    light = _light_direction(right, up, forward)
    aspect = settings.width / settings.height
    half_w = cam.half_extent * aspect
    half_h = cam.half_extent

    for tri_mesh in state.meshes:
        if tri_mesh.triangle_count == 0:
            continue
        verts = tri_mesh.vertices
        rel = verts - cam.look_at
        xc = rel @ right
        yc = rel @ up
        zc = (verts - cam.position) @ forward
        px = (xc / half_w + 1.0) * 0.5 * W
        py = (1.0 - yc / half_h) * 0.5 * H

        tris = tri_mesh.triangles
        a3, b3, c3 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
        normals = np.cross(b3 - a3, c3 - a3)
        norm_len = np.linalg.norm(normals, axis=1)

        for t in range(len(tris)):
            if norm_len[t] < 1e-30:
                continue  # degenerate triangle
            i0, i1, i2 = tris[t]
            ax, ay, az = px[i0], py[i0], zc[i0]
            bx, by, bz = px[i1], py[i1], zc[i1]
            cx, cy, cz2 = px[i2], py[i2], zc[i2]

            denom = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            if abs(denom) < 1e-12:
                continue  # edge-on in projection

            x0 = max(int(math.floor(min(ax, bx, cx))), 0)
            x1 = min(int(math.ceil(max(ax, bx, cx))), W - 1)
            y0 = max(int(math.floor(min(ay, by, cy))), 0)
            y1 = min(int(math.ceil(max(ay, by, cy))), H - 1)
            if x1 < x0 or y1 < y0:
                continue

            xs = np.arange(x0, x1 + 1, dtype=np.float64) + 0.5
            ys = np.arange(y0, y1 + 1, dtype=np.float64) + 0.5
            gx, gy = np.meshgrid(xs, ys)

            w0 = (cx - bx) * (gy - by) - (cy - by) * (gx - bx)
            w1 = (ax - cx) * (gy - cy) - (ay - cy) * (gx - cx)
            w2 = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
            inside = ((w0 >= 0) & (w1 >= 0) & (w2 >= 0)) | ((w0 <= 0) & (w1 <= 0) & (w2 <= 0))
            if not inside.any():
                continue

            l0 = w0 / denom
            l1 = w1 / denom
            l2 = w2 / denom
            z = l0 * az + l1 * bz + l2 * cz2

            window = (slice(y0, y1 + 1), slice(x0, x1 + 1))
            closer = inside & (z < depth[window])
            if not closer.any():
                continue

            n_hat = normals[t] / norm_len[t]
            shade = min(1.0, AMBIENT + DIFFUSE * abs(float(n_hat @ light))) * GRAY_ALBEDO

            depth[window] = np.where(closer, z, depth[window])
            alpha[window] = np.where(closer, 1.0, alpha[window])
            for ch in range(3):
                color[window + (ch,)] = np.where(closer, shade, color[window + (ch,)])

    # Box-filter resolve: average premultiplied color, then unpremultiply.
    h, w = settings.height, settings.width
    alpha_px = alpha.reshape(h, ss, w, ss).mean(axis=(1, 3))
    rgb_px = color.reshape(h, ss, w, ss, 3).mean(axis=(1, 3))
    safe = np.where(alpha_px > 0.0, alpha_px, 1.0)[:, :, None]
    rgb_px = np.where(alpha_px[:, :, None] > 0.0, rgb_px / safe, 0.0)

    pixels = np.concatenate([rgb_px, alpha_px[:, :, None]], axis=2).astype(np.float32)
    return RasterImage(width=w, height=h, pixels=pixels)


def foreground_mask(img: RasterImage, alpha_threshold: float = 0.5) -> BinaryMask:
    """Bit set wherever alpha exceeds the threshold. Stand-in for externally
    supplied segmentation masks when none are provided."""
    bits = img.alpha() > alpha_threshold
    return BinaryMask(width=img.width, height=img.height, bits=bits)


def largest_component(mask: BinaryMask) -> BinaryMask:
    """Keep only the largest 4-connected foreground component."""
    from scipy import ndimage

    labels, count = ndimage.label(mask.bits)
    if count <= 1:
        return mask
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, count + 1))
    keep = int(np.argmax(sizes)) + 1
    return BinaryMask(width=mask.width, height=mask.height, bits=labels == keep)
