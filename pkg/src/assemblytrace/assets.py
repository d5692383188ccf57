"""Scan, deduplicate, and validate part-hierarchy asset directories.

An asset sample directory holds ``meta.json`` (identifiers), ``result.json``
(the part tree), and ``objs/*.obj`` (leaf geometry). The scanner reads the
``model_id`` / ``model_cat`` / ``anno_id`` fields verbatim.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .validation import Issue, ValidationReport

logger = logging.getLogger(__name__)

# Category vocabulary of the upstream corpus. Unknown categories are accepted
# with a warning so the pipeline also runs on ad-hoc fixtures.
KNOWN_CATEGORIES = frozenset({
    "Table", "Chair", "StorageFurniture", "Door", "Bed",
    "Lamp", "Vase", "Hat", "Bag", "Scissors",
    "Display", "Clock", "Laptop", "Earphone", "Keyboard",
    "Faucet", "TrashCan", "Refrigerator", "Microwave", "Dishwasher",
    "Bottle", "Knife", "Mug", "Bowl",
})

META_FILENAME = "meta.json"
HIERARCHY_FILENAME = "result.json"
MESH_DIRNAME = "objs"

MAX_NAME_LENGTH = 80


@dataclass(frozen=True)
class AssetMeta:
    """Identifiers of one asset sample plus the directory it was read from."""

    model_id: str
    model_cat: str
    anno_id: str
    root_path: str

    @property
    def category_known(self) -> bool:
        return self.model_cat in KNOWN_CATEGORIES

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "model_cat": self.model_cat,
            "anno_id": self.anno_id,
            "root_path": self.root_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssetMeta":
        return cls(
            model_id=str(d["model_id"]),
            model_cat=str(d["model_cat"]),
            anno_id=str(d["anno_id"]),
            root_path=str(d["root_path"]),
        )


@dataclass(frozen=True)
class PartNode:
    """One node of the part tree. Leaves carry mesh references, inner nodes children."""

    name: str
    description: str
    node_id: int
    children: tuple["PartNode", ...] = ()
    mesh_refs: tuple[str, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class PartHierarchy:
    """A validated part tree with its depth-first leaf sequence."""

    meta: AssetMeta
    root: PartNode
    leaves: tuple[PartNode, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.leaves:
            object.__setattr__(self, "leaves", tuple(iter_leaves(self.root)))

    def leaf_by_id(self, node_id: int) -> PartNode:
        for leaf in self.leaves:
            if leaf.node_id == node_id:
                return leaf
        raise KeyError(f"no leaf with node_id {node_id}")


def iter_leaves(node: PartNode):
    """Yield leaf nodes in depth-first (pre-order, child order preserved) order."""
    if node.is_leaf:
        yield node
        return
    for child in node.children:
        yield from iter_leaves(child)


def scan_and_dedup(root_dir: str | Path, issues: list[Issue] | None = None) -> list[AssetMeta]:
    """Collect one ``AssetMeta`` per unique ``model_id`` under ``root_dir``.

    Sample folders are the immediate subdirectories containing a meta file.
    Duplicate ``model_id`` entries keep the lexicographically smallest
    ``anno_id``. Malformed meta files are skipped and recorded in ``issues``.
    The result is sorted by ``(model_cat, model_id)`` so repeated scans are
    byte-identical when serialized.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise OSError(f"not a readable directory: {root}")

    best: dict[str, AssetMeta] = {}
    for sample_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        meta_path = sample_dir / META_FILENAME
        if not meta_path.is_file():
            continue
        try:
            raw = json.loads(meta_path.read_text())
            meta = AssetMeta(
                model_id=str(raw["model_id"]),
                model_cat=str(raw["model_cat"]),
                anno_id=str(raw["anno_id"]),
                root_path=str(sample_dir),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            msg = f"skipping {sample_dir.name}: malformed meta ({exc})"
            logger.warning(msg)
            if issues is not None:
                issues.append(Issue("warning", "MALFORMED_META", msg))
            continue
        if not meta.model_id:
            msg = f"skipping {sample_dir.name}: empty model_id"
            logger.warning(msg)
            if issues is not None:
                issues.append(Issue("warning", "EMPTY_MODEL_ID", msg))
            continue
        if not meta.category_known:
            msg = f"{sample_dir.name}: unknown category {meta.model_cat!r}"
            logger.warning(msg)
            if issues is not None:
                issues.append(Issue("warning", "UNKNOWN_CATEGORY", msg))
        prev = best.get(meta.model_id)
        if prev is None or meta.anno_id < prev.anno_id:
            best[meta.model_id] = meta

    return sorted(best.values(), key=lambda m: (m.model_cat, m.model_id))


def parse_hierarchy(meta: AssetMeta) -> PartHierarchy:
    """Parse ``result.json`` of one asset into a ``PartHierarchy``.

    Leaf mesh references are resolved against the sample's ``objs/``
    directory. Names and descriptions are preserved verbatim.
    """
    path = Path(meta.root_path) / HIERARCHY_FILENAME
    if not path.is_file():
        raise FileNotFoundError(f"hierarchy file missing: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid hierarchy JSON: {exc}", path=str(path)) from exc

    if isinstance(payload, list):
        if len(payload) != 1:
            raise ParseError(
                f"expected a single root node, found {len(payload)}", path=str(path)
            )
        payload = payload[0]
    if not isinstance(payload, dict):
        raise ParseError("hierarchy root must be an object", path=str(path))

    seen_ids: set[int] = set()
    mesh_dir = Path(meta.root_path) / MESH_DIRNAME

    def build(node: dict, trail: str) -> PartNode:
        name = str(node.get("name", ""))
        here = f"{trail}/{name or '?'}"
        try:
            node_id = int(node["id"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"node without integer id at {here}", path=str(path))
        if node_id in seen_ids:
            raise ParseError(f"duplicate node id {node_id} at {here}", path=str(path))
        seen_ids.add(node_id)

        raw_children = node.get("children") or []
        raw_objs = node.get("objs") or []
        if raw_children and raw_objs:
            raise ParseError(
                f"node {here} has both children and mesh refs (leaf invariant)",
                path=str(path),
            )
        if not raw_children and not raw_objs:
            raise ParseError(
                f"node {here} has neither children nor mesh refs (leaf invariant)",
                path=str(path),
            )
        children = tuple(build(c, here) for c in raw_children)
        mesh_refs = tuple(str(mesh_dir / f"{obj}.obj") for obj in raw_objs)
        return PartNode(
            name=name,
            description=str(node.get("text", "")),
            node_id=node_id,
            children=children,
            mesh_refs=mesh_refs,
        )

    root = build(payload, "")
    return PartHierarchy(meta=meta, root=root)


def validate_asset(h: PartHierarchy, mesh_loader=None) -> ValidationReport:
    """Check mesh existence, non-emptiness, naming, and degenerate geometry.

    All problems are reported, never raised. ``mesh_loader`` defaults to the
    built-in OBJ loader and is injectable for tests.
    """
    from . import mesh as mesh_mod

    if mesh_loader is None:
        mesh_loader = mesh_mod.load_mesh

    report = ValidationReport()
    if not h.leaves:
        report.error("EMPTY_HIERARCHY", "hierarchy has no leaf parts")
        return report

    if not h.meta.category_known:
        report.warning("UNKNOWN_CATEGORY", f"category {h.meta.model_cat!r} not in the known list")

    for leaf in h.leaves:
        if not leaf.name.strip():
            report.error("EMPTY_NAME", "leaf has an empty name", node_id=leaf.node_id)
        elif len(leaf.name) > MAX_NAME_LENGTH:
            report.warning("LONG_NAME", f"name longer than {MAX_NAME_LENGTH} chars", node_id=leaf.node_id)
        for ref in leaf.mesh_refs:
            if not Path(ref).is_file():
                report.error("MISSING_MESH", f"mesh file missing: {ref}", node_id=leaf.node_id)
                continue
            try:
                tri = mesh_loader(ref)
            except ParseError as exc:
                report.error("MESH_PARSE", f"unparseable mesh {ref}: {exc}", node_id=leaf.node_id)
                continue
            if tri.triangle_count == 0 or tri.surface_area() < 1e-9:
                report.error(
                    "DEGENERATE_GEOMETRY",
                    f"mesh {ref} has no usable triangles",
                    node_id=leaf.node_id,
                )
    return report
