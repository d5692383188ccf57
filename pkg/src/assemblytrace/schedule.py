"""Deterministic assembly scheduling over part hierarchies.

A schedule partitions the leaf parts into ordered step batches: foundational
parts (bases, frames, bodies) first, symmetric siblings batched together,
every batch capped by a per-category maximum.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .assets import AssetMeta, PartHierarchy
from .errors import ConfigError, RangeError
from .validation import ValidationReport

FURNITURE_CATEGORIES = ("Table", "Chair", "StorageFurniture", "Door", "Bed")
PRECISION_CATEGORIES = ("Scissors", "Knife")

DEFAULT_FALLBACK_CAP = 10
DEFAULT_PRIORITY_KEYWORDS = ("base", "frame", "body")

_DIGITS = re.compile(r"\d+")


def normalize_part_name(name: str) -> str:
    """Grouping key for symmetric parts: lowercase, digits stripped, trailing 's' stripped."""
    n = _DIGITS.sub("", name.strip().lower())
    n = re.sub(r"[_\-\s]+", " ", n).strip()
    if len(n) > 1 and n.endswith("s"):
        n = n[:-1].rstrip()
    return n


def _default_caps() -> dict[str, int]:
    caps = {cat: 15 for cat in FURNITURE_CATEGORIES}
    caps.update({cat: 5 for cat in PRECISION_CATEGORIES})
    return caps


@dataclass(frozen=True)
class SchedulerConfig:
    max_batch_by_category: dict[str, int] = field(default_factory=_default_caps)
    fallback_cap: int = DEFAULT_FALLBACK_CAP
    priority_keywords: tuple[str, ...] = DEFAULT_PRIORITY_KEYWORDS
    symmetric_grouping: bool = True

    def __post_init__(self) -> None:
        if self.fallback_cap < 1:
            raise ConfigError("fallback batch cap must be >= 1")
        for cat, cap in self.max_batch_by_category.items():
            if cap < 1:
                raise ConfigError(f"batch cap for {cat!r} must be >= 1")

    def cap_for(self, category: str) -> int:
        return self.max_batch_by_category.get(category, self.fallback_cap)

    @classmethod
    def load(cls, path: str | Path) -> "SchedulerConfig":
        """Read a plain ``key=value`` config file.

        Recognized keys: ``max_batch.<Category>=<n>``, ``fallback_cap=<n>``,
        ``priority_keywords=<comma,list>``, ``symmetric_grouping=<true|false>``.
        Unspecified keys keep their defaults.
        """
        caps = _default_caps()
        fallback = DEFAULT_FALLBACK_CAP
        keywords = DEFAULT_PRIORITY_KEYWORDS
        grouping = True
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("max_batch."):
                caps[key[len("max_batch."):]] = int(value)
            elif key == "fallback_cap":
                fallback = int(value)
            elif key == "priority_keywords":
                keywords = tuple(k.strip() for k in value.split(",") if k.strip())
            elif key == "symmetric_grouping":
                grouping = value.lower() in ("1", "true", "yes", "on")
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        return cls(
            max_batch_by_category=caps,
            fallback_cap=fallback,
            priority_keywords=keywords,
            symmetric_grouping=grouping,
        )

    def apply_overrides(self, overrides: list[str]) -> "SchedulerConfig":
        """Apply ``<category>=<n>`` cap overrides (the CLI ``--max-batch`` flag)."""
        caps = dict(self.max_batch_by_category)
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"expected <category>=<n>, got {item!r}")
            cat, value = item.split("=", 1)
            caps[cat.strip()] = int(value)
        return SchedulerConfig(
            max_batch_by_category=caps,
            fallback_cap=self.fallback_cap,
            priority_keywords=self.priority_keywords,
            symmetric_grouping=self.symmetric_grouping,
        )


@dataclass(frozen=True)
class StepBatch:
    index: int  # 1-based
    parts: tuple[int, ...]  # leaf node_ids, never empty
    label: str

    def to_dict(self) -> dict:
        return {"index": self.index, "parts": list(self.parts), "label": self.label}


@dataclass(frozen=True)
class AssemblySchedule:
    asset: AssetMeta
    steps: tuple[StepBatch, ...]

    @property
    def step_count(self) -> int:
        return len(self.steps)

    def cumulative_parts(self, n: int) -> tuple[int, ...]:
        """All leaf ids assembled after step ``n`` (``n=0`` gives the empty prefix)."""
        if n < 0 or n > self.step_count:
            raise RangeError(f"step index {n} outside 0..{self.step_count}")
        out: list[int] = []
        for step in self.steps[:n]:
            out.extend(step.parts)
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "asset": self.asset.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "N": self.step_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssemblySchedule":
        return cls(
            asset=AssetMeta.from_dict(d["asset"]),
            steps=tuple(
                StepBatch(index=s["index"], parts=tuple(s["parts"]), label=s["label"])
                for s in d["steps"]
            ),
        )


def build_schedule(h: PartHierarchy, cfg: SchedulerConfig | None = None) -> AssemblySchedule:
    """Order the leaves of ``h`` into capped step batches.

    Leaves sharing a normalized name form one group (when symmetric grouping
    is on); groups whose name contains a priority keyword come first, in
    keyword order; the rest follow in depth-first order of their first
    member. Each group is chunked to the category cap.
    """
    cfg = cfg or SchedulerConfig()
    cap = cfg.cap_for(h.meta.model_cat)

    # Group leaves by normalized name, preserving depth-first order.
    groups: list[tuple[str, list[int]]] = []
    index_of: dict[str, int] = {}
    for leaf in h.leaves:
        key = normalize_part_name(leaf.name) if cfg.symmetric_grouping else f"#{leaf.node_id}"
        if cfg.symmetric_grouping and key in index_of:
            groups[index_of[key]][1].append(leaf.node_id)
        else:
            index_of[key] = len(groups)
            label = normalize_part_name(leaf.name) or leaf.name
            groups.append((label, [leaf.node_id]))

    def priority(label: str) -> int:
        for rank, kw in enumerate(cfg.priority_keywords):
            if kw in label:
                return rank
        return len(cfg.priority_keywords)

    ordered = sorted(
        enumerate(groups), key=lambda item: (priority(item[1][0]), item[0])
    )

    steps: list[StepBatch] = []
    for _, (label, ids) in ordered:
        for start in range(0, len(ids), cap):
            chunk = tuple(ids[start:start + cap])
            steps.append(StepBatch(index=len(steps) + 1, parts=chunk, label=label))
    return AssemblySchedule(asset=h.meta, steps=tuple(steps))


def delta_parts(s: AssemblySchedule, n: int) -> set[int]:
    """The leaf ids newly added at step ``n`` (1-based)."""
    if n < 1 or n > s.step_count:
        raise RangeError(f"step index {n} outside 1..{s.step_count}")
    return set(s.steps[n - 1].parts)


def validate_schedule(
    s: AssemblySchedule,
    cfg: SchedulerConfig | None = None,
    leaves: tuple[int, ...] | None = None,
) -> ValidationReport:
    """Check the partition property, batch caps, and foundational-first order.

    The union-covers-all-leaves check needs the hierarchy's leaf ids and is
    only performed when ``leaves`` is given.
    """
    cfg = cfg or SchedulerConfig()
    cap = cfg.cap_for(s.asset.model_cat)
    report = ValidationReport()

    if not s.steps:
        report.error("EMPTY_SCHEDULE", "schedule has no steps")
        return report

    seen: set[int] = set()
    for step in s.steps:
        if not step.parts:
            report.error("EMPTY_STEP", f"step {step.index} has no parts")
        if len(step.parts) > cap:
            report.error(
                "CAP_EXCEEDED",
                f"step {step.index} has {len(step.parts)} parts, cap is {cap}",
            )
        dup = seen.intersection(step.parts)
        if dup:
            report.error(
                "PARTITION_VIOLATION",
                f"step {step.index} repeats leaf ids {sorted(dup)}",
            )
        seen.update(step.parts)

    if leaves is not None:
        missing = set(leaves) - seen
        extra = seen - set(leaves)
        if missing:
            report.error("PARTITION_VIOLATION", f"leaves never assembled: {sorted(missing)}")
        if extra:
            report.error("PARTITION_VIOLATION", f"unknown leaf ids scheduled: {sorted(extra)}")

    # Foundational-first: once a non-priority batch appears, no priority batch may follow.
    def is_priority(label: str) -> bool:
        return any(kw in label for kw in cfg.priority_keywords)

    seen_plain = False
    for step in s.steps:
        if is_priority(step.label):
            if seen_plain:
                report.warning(
                    "FOUNDATION_ORDER",
                    f"foundational batch {step.label!r} at step {step.index} "
                    "appears after non-foundational steps",
                )
        else:
            seen_plain = True

    return report
