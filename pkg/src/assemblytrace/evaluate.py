"""Run the full metric suite over a rendered trace.

The evaluator consumes per-view final images, per-view step image
sequences (for trace metrics), step metadata (for change questions), and an
instruction spec; it queries the judge per category/attribute/pair/triplet
and assembles a ``MetricReport`` with per-view and aggregated scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .instructions import InstructionSpec
from .judge import JudgeGateway, JudgeQuery
from .metrics import (
    JudgeDecision,
    MetricReport,
    score_af,
    score_cn,
    score_cp,
    score_ra,
    score_sf,
    score_ts,
    score_vt,
    ts_empty_previous_steps,
)
from .raster import BinaryMask, RasterImage, foreground_mask, largest_component


@dataclass
class TraceEvaluationInput:
    """Everything the evaluator needs for one trace.

    ``final_images`` maps view id -> final-state PNG bytes. ``step_images``
    maps view id -> ordered step PNG bytes (used for masks and change
    questions). ``step_changes`` holds the change description per step
    (1-based order), from the step metadata files.
    """

    spec: InstructionSpec
    final_images: dict[str, bytes]
    step_images: dict[str, list[bytes]] = field(default_factory=dict)
    step_changes: list[str] = field(default_factory=list)
    masks: dict[str, list[BinaryMask]] = field(default_factory=dict)


def _mask_sequence(
    input_data: TraceEvaluationInput, view: str, keep_largest: bool
) -> list[BinaryMask]:
    if view in input_data.masks:
        seq = input_data.masks[view]
    else:
        seq = []
        for png in input_data.step_images.get(view, []):
            import io

            from PIL import Image
            import numpy as np

            img = Image.open(io.BytesIO(png)).convert("RGBA")
            arr = np.asarray(img, dtype=np.float32) / 255.0
            seq.append(
                foreground_mask(RasterImage(img.width, img.height, arr))
            )
    if keep_largest:
        seq = [largest_component(m) for m in seq]
    return seq


def evaluate_trace(
    input_data: TraceEvaluationInput,
    gateway: JudgeGateway,
    keep_largest_component: bool = False,
) -> MetricReport:
    report = MetricReport()
    spec = input_data.spec

    for view in sorted(input_data.final_images):
        final_png = input_data.final_images[view]

        counts: dict[str, int] = {}
        for requirement in spec.categories:
            counts[requirement.name] = gateway.count_components(requirement.name, final_png)
        report.counts[view] = counts
        report.per_view.set("cn", view, score_cn(spec, counts))

        sf_decision = gateway.forced_choice(
            JudgeQuery(
                template_id="shape",
                slots={"SHAPE_DESCRIPTION": spec.shape_question},
                images=(final_png,),
                question_id=f"sf/{view}",
            )
        )
        report.decisions.append(sf_decision)
        report.per_view.set("sf", view, score_sf(sf_decision))

        af_decisions: list[JudgeDecision] = []
        for i, item in enumerate(spec.attributes):
            decision = gateway.forced_choice(
                JudgeQuery(
                    template_id="attribute",
                    slots={"PART_NAME": item.category, "ATTRIBUTE": item.attribute},
                    images=(final_png,),
                    question_id=f"af/{view}/{i}",
                )
            )
            af_decisions.append(decision)
        report.decisions.extend(af_decisions)
        report.per_view.set("af", view, score_af(spec, af_decisions, counts))

        cp_decisions: list[JudgeDecision] = []
        for i, (a, b) in enumerate(spec.connectivity):
            decision = gateway.forced_choice(
                JudgeQuery(
                    template_id="connectivity",
                    slots={"PART_A": a, "PART_B": b},
                    images=(final_png,),
                    options=("Attached", "Detached"),
                    question_id=f"cp/{view}/{i}",
                )
            )
            cp_decisions.append(decision)
        report.decisions.extend(cp_decisions)
        report.per_view.set("cp", view, score_cp(spec, cp_decisions))

        vt_decisions: list[JudgeDecision] = []
        for i, triplet in enumerate(spec.relations):
            decision = gateway.forced_choice(
                JudgeQuery(
                    template_id="relation",
                    slots={
                        "PART_A": triplet.subject,
                        "PART_B": triplet.object,
                        "RELATION": triplet.predicate,
                    },
                    images=(final_png,),
                    question_id=f"vt/{view}/{i}",
                )
            )
            vt_decisions.append(decision)
        report.decisions.extend(vt_decisions)
        report.per_view.set("vt", view, score_vt(spec, vt_decisions))

        masks = _mask_sequence(input_data, view, keep_largest_component)
        ts = score_ts(masks) if len(masks) >= 2 else None
        report.per_view.set("ts", view, ts)
        if ts is not None:
            for step in ts_empty_previous_steps(masks):
                report.flags.append(
                    f"ts/{view}: retention term at step {step} forced to 0 by an empty previous mask"
                )

        step_images = input_data.step_images.get(view, [])
        if len(step_images) >= 2 and input_data.step_changes:
            ra_decisions: list[JudgeDecision] = []
            for n in range(2, len(step_images) + 1):
                change = (
                    input_data.step_changes[n - 1]
                    if n - 1 < len(input_data.step_changes)
                    else ""
                )
                decision = gateway.forced_choice(
                    JudgeQuery(
                        template_id="change",
                        slots={"CHANGE_DESCRIPTION": change},
                        images=(step_images[n - 2], step_images[n - 1]),
                        question_id=f"ra/{view}/{n}",
                    )
                )
                ra_decisions.append(decision)
            report.decisions.extend(ra_decisions)
            report.per_view.set("ra", view, score_ra(ra_decisions))

    report.finalize()
    return report
