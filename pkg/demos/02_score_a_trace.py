"""Score a rendered trace with the benchmark metrics and pack its tokens.

The walkthrough parses a goal prompt into checkable constraints, runs the
forced-choice judge loop with the offline mock judge, shows the per-view
and aggregated scores, and finishes with token accounting and budgeted
batch packing.

Run:  python3 demos/02_score_a_trace.py
"""

from assemblytrace import (
    ComposedState,
    RenderSettings,
    fit_cameras,
    foreground_mask,
    pack_batches,
    parse_instruction,
    render,
    tokenize_trace,
)
from assemblytrace.evaluate import TraceEvaluationInput, evaluate_trace
from assemblytrace.judge import JudgeGateway, MockJudgeClient
from assemblytrace.mesh import box_mesh

# ---------------------------------------------------------------------------
# 1. Parse the goal prompt into constraint sets
# ---------------------------------------------------------------------------
goal = ("Build a stool with the sturdy base, three legs and a round seat, "
        "with the legs attached to the base and the seat above the legs.")
spec = parse_instruction(goal)
print("categories: ", {c.name: c.required_count for c in spec.categories})
print("attributes: ", [(a.category, a.attribute) for a in spec.attributes])
print("connectivity:", list(spec.connectivity))
print("relations:  ", [(r.subject, r.predicate, r.object) for r in spec.relations])

# ---------------------------------------------------------------------------
# 2. Render the trace: base -> base+legs -> base+legs+seat
# ---------------------------------------------------------------------------
settings = RenderSettings(width=128, height=128, samples=4)
base = box_mesh(center=(0, 0, 0.05), size=(1, 1, 0.1))
legs = [box_mesh(center=(x, y, 0.3), size=(0.1, 0.1, 0.4))
        for x, y in ((-0.35, -0.3), (0.35, -0.3), (0.0, 0.35))]
seat = box_mesh(center=(0, 0, 0.55), size=(0.9, 0.9, 0.1))
cumulative = [[base], [base] + legs, [base] + legs + [seat]]

final = ComposedState(step=3, meshes=tuple(cumulative[-1]))
cameras = fit_cameras(final.bounds(), settings)
step_pngs, masks = [], []
for meshes in cumulative:
    img = render(ComposedState(step=0, meshes=tuple(meshes)), cameras["front"], settings)
    step_pngs.append(img.to_png_bytes())
    masks.append(foreground_mask(img))

# ---------------------------------------------------------------------------
# 3. Judge with the offline mock (counts mirror the true part multiset)
# ---------------------------------------------------------------------------
judge = MockJudgeClient.from_part_names(["base", "leg", "leg", "leg", "seat", "stool"])
gateway = JudgeGateway(judge)
report = evaluate_trace(
    TraceEvaluationInput(
        spec=spec,
        final_images={"front": step_pngs[-1]},
        step_images={"front": step_pngs},
        step_changes=["add base", "add legs", "add seat"],
        masks={"front": masks},
    ),
    gateway,
)
print("\nper-view scores:")
for metric, views in sorted(report.per_view.scores.items()):
    print(f"  {metric}: " + ", ".join(f"{v}={s:.3f}" for v, s in views.items()))
print("aggregated:", {m: round(s, 3) for m, s in sorted(report.aggregated.items())})
if report.not_applicable:
    print("not applicable:", report.not_applicable)

# ---------------------------------------------------------------------------
# 4. Token accounting and budgeted packing
# ---------------------------------------------------------------------------
seqs = []
for i in range(8):
    seq = tokenize_trace(
        f"trace-{i}", goal, ["First, base.", "Next, legs.", "Finally, seat."],
        image_count=3, settings=RenderSettings(width=512, height=512),
    )
    seqs.append(seq)
print(f"\ntokens per trace: {seqs[0].token_count} "
      f"(goal+rationales text plus 3 image blocks)")
plan = pack_batches(seqs, expected=40_000, cap=50_000, low_water=20_000, seed=0)
for i, batch in enumerate(plan.batches):
    print(f"  batch {i}: {batch}")
