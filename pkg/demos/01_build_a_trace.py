"""Build a step-aligned assembly trace from a part hierarchy, end to end.

This walkthrough materializes a small chair-like asset on disk, then runs
the construction stages one by one: scan/validate, schedule, render each
cumulative state, annotate with the offline mock endpoint, and serialize
the final interleaved record.

Run:  python3 demos/01_build_a_trace.py
"""

import json
import tempfile
from pathlib import Path

from assemblytrace import (
    GoalPrompt,
    RenderSettings,
    assemble_trace,
    build_schedule,
    compose_state,
    fit_cameras,
    parse_hierarchy,
    render,
    scan_and_dedup,
    serialize_record,
    validate_asset,
)
from assemblytrace.annotate import generate_goal_prompt, generate_step_rationale
from assemblytrace.client import MockChatClient
from assemblytrace.mesh import box_mesh, write_obj

workdir = Path(tempfile.mkdtemp(prefix="trace_demo_"))
print(f"working in {workdir}\n")

# ---------------------------------------------------------------------------
# 1. Materialize an asset directory: meta.json + result.json + objs/*.obj
# ---------------------------------------------------------------------------
sample = workdir / "assets" / "chair_0001"
(sample / "objs").mkdir(parents=True)
(sample / "meta.json").write_text(
    json.dumps({"model_id": "demo-1", "model_cat": "Chair", "anno_id": "a"})
)
hierarchy_json = [{
    "name": "chair", "text": "a demo chair", "id": 0,
    "children": [
        {"name": "base", "text": "base board", "id": 1, "objs": ["base"]},
        {"name": "leg", "text": "front left leg", "id": 2, "objs": ["leg1"]},
        {"name": "leg", "text": "front right leg", "id": 3, "objs": ["leg2"]},
        {"name": "seat", "text": "the seat", "id": 4, "objs": ["seat"]},
    ],
}]
(sample / "result.json").write_text(json.dumps(hierarchy_json))
boxes = {
    "base": ((0, 0, 0.05), (1, 1, 0.1)),
    "leg1": ((-0.4, 0, 0.35), (0.1, 0.1, 0.5)),
    "leg2": ((0.4, 0, 0.35), (0.1, 0.1, 0.5)),
    "seat": ((0, 0, 0.65), (1, 1, 0.1)),
}
for name, (center, size) in boxes.items():
    write_obj(box_mesh(center=center, size=size), sample / "objs" / f"{name}.obj")

# ---------------------------------------------------------------------------
# 2. Scan, dedup, and validate
# ---------------------------------------------------------------------------
meta = scan_and_dedup(workdir / "assets")[0]
asset = parse_hierarchy(meta)
report = validate_asset(asset)
print(f"asset {meta.model_id}: {len(asset.leaves)} leaves, valid={report.ok}")

# ---------------------------------------------------------------------------
# 3. Schedule: foundational parts first, symmetric parts batched
# ---------------------------------------------------------------------------
schedule = build_schedule(asset)
for step in schedule.steps:
    print(f"  step {step.index}: {step.label:<6} parts={list(step.parts)}")

# ---------------------------------------------------------------------------
# 4. Render each cumulative state under the canonical front camera.
#    The camera is fitted ONCE on the final assembly so intermediate states
#    keep a constant scale.
# ---------------------------------------------------------------------------
settings = RenderSettings(width=256, height=256, samples=4)
final_state = compose_state(asset, schedule, schedule.step_count)
cameras = fit_cameras(final_state.bounds(), settings)
images = []
for n in range(1, schedule.step_count + 1):
    state = compose_state(asset, schedule, n)
    img = render(state, cameras["front"], settings)
    out = workdir / f"step_{n}.png"
    img.save(out)
    images.append(img.to_png_bytes())
    print(f"  rendered {out.name}: {state.triangle_count} triangles")

# ---------------------------------------------------------------------------
# 5. Annotate with the offline mock endpoint (deterministic, no network)
# ---------------------------------------------------------------------------
client = MockChatClient()
names = {leaf.node_id: leaf.name for leaf in asset.leaves}
goal = generate_goal_prompt(
    images[-1], [leaf.name for leaf in asset.leaves],
    [f"add {step.label}" for step in schedule.steps], client,
)
print(f"\ngoal prompt: {goal.text}")

rationales = []
for n, step in enumerate(schedule.steps, start=1):
    rationale = generate_step_rationale(
        n, schedule.step_count, None, images[n - 1],
        [names[i] for i in step.parts], client,
        existing_names=[names[i] for i in schedule.cumulative_parts(n - 1)],
        object_type="chair", goal_text=goal.text,
    )
    rationales.append(rationale)
    print(f"  z_{n}: {rationale.text}")

# ---------------------------------------------------------------------------
# 6. Assemble the interleaved trace and serialize the flat record
# ---------------------------------------------------------------------------
trace = assemble_trace(goal, schedule, rationales, images, part_names=names)
record = serialize_record(trace, category=meta.model_cat, model_id=meta.model_id)
print(f"\nrecord prompt field:       {record.prompt!r}")
print(f"record final answer field: {record.final_answer!r}")
print(f"reasoning trace (first 120 chars):\n  {record.reasoning_trace[:120]}...")
print(f"\nartifacts saved under {workdir}")
