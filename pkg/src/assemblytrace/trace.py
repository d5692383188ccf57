"""Interleaved assembly traces and their flat record form.

A trace is a goal prompt followed by step-aligned (rationale, image) pairs.
Records wrap each rationale in thought markers, give every image slot a
numbered placeholder, and end with the fixed completion marker; parsing a
record recovers the trace structure exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .annotate import GoalPrompt, StepRationale
from .errors import ParseError, StructureError
from .schedule import AssemblySchedule

THOUGHT_OPEN = "<thought>"
THOUGHT_CLOSE = "</thought>"
IMAGE_START = "<image_start>"
IMAGE_END = "<image_end>"
FINAL_ANSWER = "<assembly>Final Assembly: FINISH</assembly>"

PROMPT_FIELD = "Prompt"
TRACE_FIELD = "Shape of Thought Reasoning Trace"
FINAL_FIELD = "Final Assembly"
REASONING_IMAGE_FIELD = "reasoning_image_{k}"
FINAL_IMAGE_FIELD = "final_image"

_RESERVED = (THOUGHT_OPEN, THOUGHT_CLOSE, IMAGE_START, IMAGE_END, "<assembly>", "</assembly>")

_STEP_RE = re.compile(
    re.escape(THOUGHT_OPEN)
    + "(.*?)"
    + re.escape(THOUGHT_CLOSE)
    + re.escape(IMAGE_START)
    + r"<reasoning_image_(\d+)>"
    + re.escape(IMAGE_END),
    re.DOTALL,
)


@dataclass(frozen=True)
class StepMetadata:
    cumulative_parts: tuple[str, ...]
    change_description: str

    def to_dict(self) -> dict:
        return {
            "cumulative_parts": list(self.cumulative_parts),
            "change_description": self.change_description,
        }


@dataclass(frozen=True)
class TraceStep:
    n: int
    rationale: StepRationale
    image_ref: str | bytes  # path on disk or inline PNG bytes
    metadata: StepMetadata

    def image_bytes(self) -> bytes:
        if isinstance(self.image_ref, bytes):
            return self.image_ref
        return Path(self.image_ref).read_bytes()


@dataclass(frozen=True)
class AssemblyTrace:
    goal: GoalPrompt
    steps: tuple[TraceStep, ...]

    def __post_init__(self) -> None:
        for i, step in enumerate(self.steps, start=1):
            if step.n != i:
                raise StructureError(f"steps must be numbered 1..N contiguously, found {step.n} at {i}")

    @property
    def step_count(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ImagePayload:
    """Image bytes plus the relative path they were (or will be) stored under."""

    data: bytes
    path: str

    def to_dict(self) -> dict:
        return {"bytes": self.data, "path": self.path}


@dataclass(frozen=True)
class TraceRecord:
    prompt: str
    reasoning_trace: str
    final_answer: str
    reasoning_images: tuple[ImagePayload, ...]
    final_image: ImagePayload
    category: str = "unknown"
    model_id: str = ""

    @property
    def step_count(self) -> int:
        return len(self.reasoning_images)


def assemble_trace(
    goal: GoalPrompt,
    schedule: AssemblySchedule,
    rationales: list[StepRationale],
    images: list[str | bytes],
    part_names: dict[int, str] | None = None,
) -> AssemblyTrace:
    """Zip rationales and images over the schedule's steps.

    ``part_names`` maps leaf node ids to names for the step metadata; ids are
    used verbatim when it is omitted.
    """
    n = schedule.step_count
    if len(rationales) != n or len(images) != n:
        raise StructureError(
            f"schedule has {n} steps but got {len(rationales)} rationales "
            f"and {len(images)} images"
        )

    def name_of(node_id: int) -> str:
        return part_names[node_id] if part_names else str(node_id)

    steps = []
    for i, batch in enumerate(schedule.steps, start=1):
        cumulative = tuple(name_of(p) for p in schedule.cumulative_parts(i))
        added = ", ".join(name_of(p) for p in batch.parts)
        steps.append(
            TraceStep(
                n=i,
                rationale=rationales[i - 1],
                image_ref=images[i - 1],
                metadata=StepMetadata(
                    cumulative_parts=cumulative,
                    change_description=f"add {added}",
                ),
            )
        )
    return AssemblyTrace(goal=goal, steps=tuple(steps))


def _check_reserved(text: str, what: str) -> None:
    for marker in _RESERVED:
        if marker in text:
            raise StructureError(f"{what} contains reserved marker {marker!r}")


def image_placeholder(k: int) -> str:
    return f"<reasoning_image_{k}>"


def serialize_record(t: AssemblyTrace, category: str = "unknown", model_id: str = "") -> TraceRecord:
    """Flatten a trace into its record form.

    Rationales are wrapped in thought markers, image slots carry numbered
    placeholders bounded by the image markers, and the final answer is the
    verbatim completion marker. The last step's image doubles as the final
    image.
    """
    if not t.steps:
        raise StructureError("cannot serialize a trace with no steps")
    _check_reserved(t.goal.text, "goal prompt")

    segments = []
    images = []
    for step in t.steps:
        _check_reserved(step.rationale.text, f"rationale {step.n}")
        segments.append(
            THOUGHT_OPEN
            + step.rationale.text
            + THOUGHT_CLOSE
            + IMAGE_START
            + image_placeholder(step.n)
            + IMAGE_END
        )
        rel = f"{category}/{model_id or 'trace'}/step_{step.n}.png"
        images.append(ImagePayload(data=step.image_bytes(), path=rel))

    final = ImagePayload(
        data=t.steps[-1].image_bytes(),
        path=f"{category}/{model_id or 'trace'}/final_complete.png",
    )
    return TraceRecord(
        prompt=t.goal.text,
        reasoning_trace="\n".join(segments),
        final_answer=FINAL_ANSWER,
        reasoning_images=tuple(images),
        final_image=final,
        category=category,
        model_id=model_id,
    )


def parse_record(record: TraceRecord) -> AssemblyTrace:
    """Inverse of ``serialize_record`` up to step metadata (which the flat
    form does not carry)."""
    if record.final_answer != FINAL_ANSWER:
        raise ParseError(
            f"final answer field is {record.final_answer!r}, expected the fixed marker"
        )
    matches = list(_STEP_RE.finditer(record.reasoning_trace))
    if not matches:
        raise ParseError("no steps found in the reasoning trace")
    leftovers = _STEP_RE.sub("", record.reasoning_trace).strip()
    if leftovers:
        raise ParseError(f"unparsed content in reasoning trace: {leftovers[:60]!r}")
    if len(matches) != len(record.reasoning_images):
        raise ParseError(
            f"{len(matches)} placeholders but {len(record.reasoning_images)} image fields"
        )

    steps = []
    for i, m in enumerate(matches, start=1):
        text, k = m.group(1), int(m.group(2))
        if k != i:
            raise ParseError(f"image placeholder numbered {k}, expected {i}")
        steps.append(
            TraceStep(
                n=i,
                rationale=StepRationale(step=i, text=text),
                image_ref=record.reasoning_images[i - 1].data,
                metadata=StepMetadata(cumulative_parts=(), change_description=""),
            )
        )
    return AssemblyTrace(
        goal=GoalPrompt(text=record.prompt, source="record"),
        steps=tuple(steps),
    )
