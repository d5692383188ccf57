"""Trace assembly and record serialization round trips."""

from __future__ import annotations

import random
import string

import pytest

from assemblytrace.annotate import GoalPrompt, StepRationale
from assemblytrace.assets import AssetMeta
from assemblytrace.errors import ParseError, StructureError
from assemblytrace.schedule import AssemblySchedule, StepBatch
from assemblytrace.trace import (
    FINAL_ANSWER,
    AssemblyTrace,
    StepMetadata,
    TraceStep,
    assemble_trace,
    parse_record,
    serialize_record,
)

FAKE_PNG = b"\x89PNG fake bytes"


def make_schedule(n_steps: int) -> AssemblySchedule:
    return AssemblySchedule(
        asset=AssetMeta("m1", "Chair", "a", "/tmp/x"),
        steps=tuple(
            StepBatch(index=i + 1, parts=(i + 1,), label=f"part{i + 1}")
            for i in range(n_steps)
        ),
    )


def make_trace(n_steps: int, rng: random.Random | None = None) -> AssemblyTrace:
    rng = rng or random.Random(0)
    words = lambda k: " ".join(
        "".join(rng.choices(string.ascii_lowercase, k=rng.randint(2, 8)))
        for _ in range(k)
    )
    goal = GoalPrompt(text="Build " + words(6) + ".", source="mock")
    steps = tuple(
        TraceStep(
            n=i + 1,
            rationale=StepRationale(step=i + 1, text=words(rng.randint(8, 22))),
            image_ref=FAKE_PNG + bytes([i]),
            metadata=StepMetadata(cumulative_parts=(f"p{i}",), change_description=f"add p{i}"),
        )
        for i in range(n_steps)
    )
    return AssemblyTrace(goal=goal, steps=steps)


def test_assemble_single_step():
    goal = GoalPrompt(text="Build a bowl.")
    schedule = make_schedule(1)
    trace = assemble_trace(goal, schedule, [StepRationale(step=1, text="Place the bowl.")],
                           [FAKE_PNG])
    assert trace.step_count == 1
    assert trace.steps[0].metadata.change_description == "add 1"


def test_assemble_toy_chair_four_steps(toy_chair_asset):
    from assemblytrace.schedule import build_schedule

    schedule = build_schedule(toy_chair_asset)
    names = {leaf.node_id: leaf.name for leaf in toy_chair_asset.leaves}
    rationales = [StepRationale(step=i, text=f"step {i}") for i in range(1, 5)]
    trace = assemble_trace(
        GoalPrompt(text="Build a chair."), schedule, rationales, [FAKE_PNG] * 4, part_names=names
    )
    assert trace.step_count == 4
    assert trace.goal.text == "Build a chair."
    assert trace.steps[1].metadata.change_description == "add leg, leg, leg, leg"


def test_assemble_length_mismatch():
    schedule = make_schedule(3)
    with pytest.raises(StructureError):
        assemble_trace(
            GoalPrompt(text="Build."), schedule,
            [StepRationale(step=1, text="x")] * 2, [FAKE_PNG] * 3,
        )


def test_serialize_final_answer_marker():
    record = serialize_record(make_trace(3))
    assert record.final_answer == "<assembly>Final Assembly: FINISH</assembly>"
    assert record.final_answer == FINAL_ANSWER


def test_serialize_placeholders_match_image_fields():
    record = serialize_record(make_trace(2))
    assert len(record.reasoning_images) == 2
    assert "<reasoning_image_1>" in record.reasoning_trace
    assert "<reasoning_image_2>" in record.reasoning_trace
    assert "<reasoning_image_3>" not in record.reasoning_trace


def test_serialize_wraps_thoughts_and_images():
    trace = make_trace(1)
    record = serialize_record(trace)
    expected = (
        "<thought>" + trace.steps[0].rationale.text + "</thought>"
        "<image_start><reasoning_image_1><image_end>"
    )
    assert record.reasoning_trace == expected


def test_roundtrip_recovers_structure():
    trace = make_trace(4)
    record = serialize_record(trace, category="Chair", model_id="m1")
    back = parse_record(record)
    assert back.step_count == 4
    assert back.goal.text == trace.goal.text
    for original, parsed in zip(trace.steps, back.steps):
        assert parsed.rationale.text == original.rationale.text
        assert parsed.image_ref == original.image_bytes()


def test_roundtrip_randomized_traces():
    rng = random.Random(7)
    for _ in range(100):
        trace = make_trace(rng.randint(1, 8), rng)
        back = parse_record(serialize_record(trace))
        assert back.step_count == trace.step_count
        assert [s.rationale.text for s in back.steps] == [
            s.rationale.text for s in trace.steps
        ]


def test_reserved_marker_in_rationale_rejected():
    trace = make_trace(1)
    bad = AssemblyTrace(
        goal=trace.goal,
        steps=(
            TraceStep(
                n=1,
                rationale=StepRationale(step=1, text="evil <image_start> text"),
                image_ref=FAKE_PNG,
                metadata=trace.steps[0].metadata,
            ),
        ),
    )
    with pytest.raises(StructureError, match="reserved marker"):
        serialize_record(bad)


def test_parse_rejects_wrong_final_answer():
    record = serialize_record(make_trace(1))
    from dataclasses import replace

    broken = replace(record, final_answer="<assembly>done</assembly>")
    with pytest.raises(ParseError):
        parse_record(broken)


def test_parse_rejects_misnumbered_placeholder():
    record = serialize_record(make_trace(2))
    from dataclasses import replace

    broken = replace(
        record,
        reasoning_trace=record.reasoning_trace.replace("reasoning_image_2", "reasoning_image_5"),
    )
    with pytest.raises(ParseError):
        parse_record(broken)


def test_noncontiguous_steps_rejected():
    trace = make_trace(2)
    with pytest.raises(StructureError):
        AssemblyTrace(goal=trace.goal, steps=(trace.steps[1],))
