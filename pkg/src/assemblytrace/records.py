"""Columnar persistence of trace records and the train/val/test splitter.

Records are written as Parquet under a ``<Category>/<split>/`` layout with
one file per partition. Column names are fixed by the release format: the
prompt, the reasoning trace with image placeholders, the final-answer
marker, and per-image structs carrying embedded bytes plus a relative path.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
import pyarrow as pa
import pyarrow.parquet as pq

from .errors import ConfigError
from .trace import (
    FINAL_FIELD,
    FINAL_IMAGE_FIELD,
    PROMPT_FIELD,
    TRACE_FIELD,
    ImagePayload,
    TraceRecord,
)

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.699, 0.101, 0.200)

_IMAGE_STRUCT = pa.struct([("bytes", pa.binary()), ("path", pa.string())])


def reasoning_image_field(k: int) -> str:
    return f"reasoning_image_{k}"


def _record_model_id(record: TraceRecord) -> str:
    if record.model_id:
        return record.model_id
    # Written payloads embed "<category>/<model_id>/..." relative paths.
    parts = record.final_image.path.split("/")
    return parts[1] if len(parts) >= 2 else record.final_image.path


def split_dataset(
    records: list[TraceRecord],
    seed: int | None = 0,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    manifest: dict[str, str] | None = None,
) -> tuple[list[TraceRecord], list[TraceRecord], list[TraceRecord]]:
    """Split records per category with largest-remainder rounding.

    ``manifest`` (model_id -> split name) overrides everything and is applied
    verbatim. Otherwise each category is shuffled deterministically under
    ``seed`` and partitioned so counts stay within one record of the exact
    ratios.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {sum(ratios)}")

    if manifest is not None:
        buckets: dict[str, list[TraceRecord]] = {s: [] for s in SPLITS}
        for record in records:
            split = manifest.get(_record_model_id(record))
            if split not in SPLITS:
                raise ConfigError(
                    f"manifest entry for {_record_model_id(record)!r} is {split!r}"
                )
            buckets[split].append(record)
        return buckets["train"], buckets["val"], buckets["test"]

    by_category: dict[str, list[TraceRecord]] = {}
    for record in records:
        by_category.setdefault(record.category, []).append(record)

    out: dict[str, list[TraceRecord]] = {s: [] for s in SPLITS}
    rng = np.random.default_rng(seed)
    for category in sorted(by_category):
        group = by_category[category]
        order = rng.permutation(len(group))
        shuffled = [group[i] for i in order]
        counts = _largest_remainder(len(group), ratios)
        start = 0
        for split, count in zip(SPLITS, counts):
            out[split].extend(shuffled[start:start + count])
            start += count
    return out["train"], out["val"], out["test"]


def _largest_remainder(total: int, ratios: tuple[float, ...]) -> list[int]:
    exact = [total * r for r in ratios]
    counts = [int(e) for e in exact]
    shortfall = total - sum(counts)
    remainders = sorted(
        range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i)
    )
    for i in remainders[:shortfall]:
        counts[i] += 1
    return counts


def _records_to_table(records: list[TraceRecord]) -> pa.Table:
    max_steps = max(r.step_count for r in records)
    data: dict[str, list] = {
        PROMPT_FIELD: [r.prompt for r in records],
        TRACE_FIELD: [r.reasoning_trace for r in records],
        FINAL_FIELD: [r.final_answer for r in records],
    }
    fields = [
        pa.field(PROMPT_FIELD, pa.string()),
        pa.field(TRACE_FIELD, pa.string()),
        pa.field(FINAL_FIELD, pa.string()),
    ]
    for k in range(1, max_steps + 1):
        column = []
        for r in records:
            if k <= r.step_count:
                column.append(r.reasoning_images[k - 1].to_dict())
            else:
                column.append(None)  # ragged step counts pad with nulls
        data[reasoning_image_field(k)] = column
        fields.append(pa.field(reasoning_image_field(k), _IMAGE_STRUCT))
    data[FINAL_IMAGE_FIELD] = [r.final_image.to_dict() for r in records]
    fields.append(pa.field(FINAL_IMAGE_FIELD, _IMAGE_STRUCT))
    return pa.table(data, schema=pa.schema(fields))


def write_records(records: list[TraceRecord], out_dir: str | Path, split: str = "train") -> list[Path]:
    """Write records into ``<category>/<split>/`` Parquet partitions.

    Returns the written file paths. Use :func:`write_split_records` to lay
    out an already-split triple in one call.
    """
    if split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}")
    out_dir = Path(out_dir)
    by_category: dict[str, list[TraceRecord]] = {}
    for record in records:
        by_category.setdefault(record.category, []).append(record)

    written: list[Path] = []
    for category in sorted(by_category):
        part_dir = out_dir / category / split
        part_dir.mkdir(parents=True, exist_ok=True)
        path = part_dir / f"{split}-00000-of-00001.parquet"
        try:
            pq.write_table(_records_to_table(by_category[category]), path)
        except OSError as exc:
            raise OSError(f"failed writing {path}: {exc}") from exc
        written.append(path)
    return written


def write_split_records(
    splits: tuple[list[TraceRecord], list[TraceRecord], list[TraceRecord]],
    out_dir: str | Path,
) -> list[Path]:
    """Write an already-split (train, val, test) triple into the layout."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    for split, group in zip(SPLITS, splits):
        by_category: dict[str, list[TraceRecord]] = {}
        for record in group:
            by_category.setdefault(record.category, []).append(record)
        for category in sorted(by_category):
            part_dir = out_dir / category / split
            part_dir.mkdir(parents=True, exist_ok=True)
            path = part_dir / f"{split}-00000-of-00001.parquet"
            pq.write_table(_records_to_table(by_category[category]), path)
            written.append(path)
    return written


def read_records(dir_path: str | Path, split: str | None = None) -> list[TraceRecord]:
    """Read every record under the layout (optionally one split only).

    A missing directory or empty selection returns an empty list with a
    warning rather than raising.
    """
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        logger.warning("record directory %s does not exist", dir_path)
        return []

    records: list[TraceRecord] = []
    for category_dir in sorted(p for p in dir_path.iterdir() if p.is_dir()):
        split_names = [split] if split else list(SPLITS)
        for split_name in split_names:
            split_dir = category_dir / split_name
            if not split_dir.is_dir():
                continue
            for file_path in sorted(split_dir.glob("*.parquet")):
                table = pq.read_table(file_path)
                records.extend(_table_to_records(table, category_dir.name))
    if not records:
        logger.warning("no records found under %s", dir_path)
    return records


def _table_to_records(table: pa.Table, category: str) -> list[TraceRecord]:
    cols = table.column_names
    image_cols = sorted(
        (c for c in cols if c.startswith("reasoning_image_")),
        key=lambda c: int(c.rsplit("_", 1)[1]),
    )
    rows = table.to_pylist()
    out = []
    for row in rows:
        images = []
        for c in image_cols:
            cell = row[c]
            if cell is None:
                continue
            images.append(ImagePayload(data=cell["bytes"], path=cell["path"]))
        final = row[FINAL_IMAGE_FIELD]
        record = TraceRecord(
            prompt=row[PROMPT_FIELD],
            reasoning_trace=row[TRACE_FIELD],
            final_answer=row[FINAL_FIELD],
            reasoning_images=tuple(images),
            final_image=ImagePayload(data=final["bytes"], path=final["path"]),
            category=category,
        )
        out.append(replace(record, model_id=_record_model_id(record)))
    return out
