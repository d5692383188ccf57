"""Triangle meshes and a minimal Wavefront OBJ reader.

Only vertex positions and faces are consumed; normals, texture coordinates,
materials, and grouping statements are ignored. Faces with more than three
vertices are fan-triangulated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int32, indices into vertices
    source_path: str = ""

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if not np.isfinite(v).all():
            raise ParseError("non-finite vertex coordinates", path=self.source_path)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ParseError("triangle index out of range", path=self.source_path)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def vertex_count(self) -> int:
        return int(len(self.vertices))

    @property
    def triangle_count(self) -> int:
        return int(len(self.triangles))

    def surface_area(self) -> float:
        if self.triangle_count == 0:
            return 0.0
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        cross = np.cross(b - a, c - a)
        return float(0.5 * np.linalg.norm(cross, axis=1).sum())

    def scaled(self, factor: float) -> "TriangleMesh":
        return TriangleMesh(self.vertices * float(factor), self.triangles, self.source_path)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(min_corner, max_corner) of the vertex cloud."""
        if self.vertex_count == 0:
            zero = np.zeros(3)
            return zero, zero
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def load_mesh(path: str) -> TriangleMesh:
    """Read an OBJ-style text file into a ``TriangleMesh``.

    Raises ``FileNotFoundError`` for a missing file and ``ParseError`` with
    the 1-based line number for malformed vertex or face statements.
    """
    try:
        text = open(path, "r", encoding="utf-8", errors="replace").read()
    except FileNotFoundError:
        raise FileNotFoundError(f"mesh file not found: {path}")

    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        tag = tokens[0]
        if tag == "v":
            if len(tokens) < 4:
                raise ParseError("vertex with fewer than 3 coordinates", path=path, line=lineno)
            try:
                x, y, z = (float(tokens[i]) for i in (1, 2, 3))
            except ValueError:
                raise ParseError("non-numeric vertex coordinate", path=path, line=lineno)
            vertices.append((x, y, z))
        elif tag == "f":
            if len(tokens) < 4:
                raise ParseError("face with fewer than 3 vertices", path=path, line=lineno)
            idx: list[int] = []
            for tok in tokens[1:]:
                head = tok.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ParseError(f"non-numeric face index {tok!r}", path=path, line=lineno)
                if i > 0:
                    i -= 1  # OBJ indices are 1-based
                elif i < 0:
                    i += len(vertices)  # negative indices count from the end
                else:
                    raise ParseError("face index 0 is invalid", path=path, line=lineno)
                if i < 0 or i >= len(vertices):
                    raise ParseError(f"face index {tok!r} out of range", path=path, line=lineno)
                idx.append(i)
            for k in range(1, len(idx) - 1):  # fan triangulation
                faces.append((idx[0], idx[k], idx[k + 1]))
        # every other statement (vn, vt, o, g, s, usemtl, mtllib, ...) is ignored

    return TriangleMesh(
        vertices=np.array(vertices, dtype=np.float64).reshape(-1, 3),
        triangles=np.array(faces, dtype=np.int32).reshape(-1, 3),
        source_path=str(path),
    )


def box_mesh(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0)) -> TriangleMesh:
    """Axis-aligned box, 8 vertices / 12 triangles. Handy for fixtures and demos."""
    cx, cy, cz = center
    hx, hy, hz = (s / 2.0 for s in size)
    corners = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ],
        dtype=np.float64,
    )
    quads = [
        (0, 1, 2, 3),  # bottom
        (4, 7, 6, 5),  # top
        (0, 4, 5, 1),  # -y
        (2, 6, 7, 3),  # +y
        (1, 5, 6, 2),  # +x
        (0, 3, 7, 4),  # -x
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return TriangleMesh(corners, np.array(tris, dtype=np.int32))


def write_obj(mesh: TriangleMesh, path: str) -> None:
    """Write a mesh as OBJ text (used by fixtures and the demo scripts)."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
