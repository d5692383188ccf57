"""Command-line entry point wiring the full pipeline.

Stages: curate -> schedule -> render -> annotate -> pack -> split -> eval,
plus stats and audit utilities and a one-shot ``pipeline`` command. Every
stage reads its predecessors' outputs from the work directory and records
output hashes in the run manifest so reruns are verifiable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import annotate as annotate_mod
from . import assets as assets_mod
from . import budget as budget_mod
from . import contract as contract_mod
from . import packing as packing_mod
from . import records as records_mod
from . import stats as stats_mod
from .annotate import GoalPrompt, StepRationale
from .client import MockChatClient
from .errors import AssemblyTraceError
from .evaluate import TraceEvaluationInput, evaluate_trace
from .instructions import parse_instruction
from .judge import JudgeGateway, MockJudgeClient
from .metrics import METRICS
from .raster import BinaryMask, RenderSettings, VIEW_IDS
from .schedule import AssemblySchedule, SchedulerConfig, build_schedule, validate_schedule
from .trace import assemble_trace, serialize_record

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunManifest:
    """Config snapshot plus per-stage status, timing, and output hashes."""

    def __init__(self, workdir: Path, config: dict):
        self.path = workdir / "manifest.json"
        if self.path.is_file():
            self.data = json.loads(self.path.read_text())
        else:
            self.data = {"config": {}, "stages": {}}
        self.data["config"].update(config)

    def record(self, stage: str, outputs: list[Path], elapsed: float, status: str = "ok") -> None:
        self.data["stages"][stage] = {
            "status": status,
            "elapsed_s": round(elapsed, 3),
            "outputs": {
                str(p): _sha256_file(p) for p in sorted(outputs) if p.is_file()
            },
        }
        self.save()

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True))


def _write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def _scheduler_config(args) -> SchedulerConfig:
    cfg = (
        SchedulerConfig.load(args.scheduler_config)
        if getattr(args, "scheduler_config", None)
        else SchedulerConfig()
    )
    overrides = getattr(args, "max_batch", None) or []
    return cfg.apply_overrides(overrides) if overrides else cfg


# --------------------------------------------------------------------------
# stages


def stage_curate(args, workdir: Path) -> list[Path]:
    issues: list = []
    metas = assets_mod.scan_and_dedup(args.input, issues=issues)
    rows = []
    for meta in metas:
        entry = {"meta": meta.to_dict()}
        try:
            hierarchy = assets_mod.parse_hierarchy(meta)
            report = assets_mod.validate_asset(hierarchy)
            entry["leaves"] = [
                {"node_id": leaf.node_id, "name": leaf.name, "mesh_refs": list(leaf.mesh_refs)}
                for leaf in hierarchy.leaves
            ]
            entry["validation"] = report.to_dict()
        except (AssemblyTraceError, FileNotFoundError) as exc:
            entry["validation"] = {"ok": False, "issues": [
                {"severity": "error", "code": "PARSE_FAILURE", "message": str(exc), "node_id": None}
            ]}
        rows.append(entry)
    out = _write_json(
        workdir / "curated" / "assets.json",
        {
            "assets": rows,
            "scan_issues": [
                {"severity": i.severity, "code": i.code, "message": i.message} for i in issues
            ],
        },
    )
    kept = sum(1 for r in rows if r["validation"]["ok"])
    print(f"curate: {len(rows)} unique assets, {kept} valid")
    return [out]


def _load_curated(workdir: Path) -> list[dict]:
    path = workdir / "curated" / "assets.json"
    if not path.is_file():
        raise AssemblyTraceError("run the curate stage first (curated/assets.json missing)")
    return [r for r in json.loads(path.read_text())["assets"] if r["validation"]["ok"]]


def stage_schedule(args, workdir: Path) -> list[Path]:
    cfg = _scheduler_config(args)
    outputs = []
    for row in _load_curated(workdir):
        meta = assets_mod.AssetMeta.from_dict(row["meta"])
        hierarchy = assets_mod.parse_hierarchy(meta)
        schedule = build_schedule(hierarchy, cfg)
        report = validate_schedule(
            schedule, cfg, leaves=tuple(l.node_id for l in hierarchy.leaves)
        )
        if not report.ok:
            raise AssemblyTraceError(
                f"schedule validation failed for {meta.model_id}: {report.codes()}"
            )
        outputs.append(
            _write_json(workdir / "schedules" / f"{meta.model_id}.json", schedule.to_dict())
        )
    print(f"schedule: {len(outputs)} schedules")
    return outputs


def _load_schedules(workdir: Path) -> list[AssemblySchedule]:
    sched_dir = workdir / "schedules"
    if not sched_dir.is_dir():
        raise AssemblyTraceError("run the schedule stage first (schedules/ missing)")
    return [
        AssemblySchedule.from_dict(json.loads(p.read_text()))
        for p in sorted(sched_dir.glob("*.json"))
    ]


def stage_render(args, workdir: Path) -> list[Path]:
    settings = RenderSettings(width=args.width, height=args.height, samples=args.samples)
    views = tuple(args.views.split(","))
    for view in views:
        if view not in VIEW_IDS:
            raise AssemblyTraceError(f"unknown view {view!r}; choose from {VIEW_IDS}")

    schedules = _load_schedules(workdir)
    jobs = max(1, getattr(args, "jobs", 1))
    if jobs > 1 and len(schedules) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_asset = list(
                pool.map(lambda s: _render_one(args, workdir, s, settings, views), schedules)
            )
    else:
        per_asset = [_render_one(args, workdir, s, settings, views) for s in schedules]
    outputs = [p for chunk in per_asset for p in chunk]
    print(f"render: {len(outputs)} files")
    return outputs


def _render_one(args, workdir: Path, schedule, settings, views) -> list[Path]:
    outputs: list[Path] = []
    meta = schedule.asset
    hierarchy = assets_mod.parse_hierarchy(meta)
    names = {leaf.node_id: leaf.name for leaf in hierarchy.leaves}
    render_dir = workdir / "renders" / meta.model_id
    render_dir.mkdir(parents=True, exist_ok=True)

    states = []
    for n in range(1, schedule.step_count + 1):
        mesh_paths: list[str] = []
        for node_id in schedule.cumulative_parts(n):
            mesh_paths.extend(hierarchy.leaf_by_id(node_id).mesh_refs)
        out_map = {}
        for view in views:
            suffix = f"step_{n}.png" if view == "front" else f"{view}_step_{n}.png"
            out_map[view] = str(render_dir / suffix)
        states.append(
            contract_mod.StateRequest(
                state_id=f"step_{n}", mesh_paths=tuple(mesh_paths), outputs=out_map
            )
        )
    request = contract_mod.RenderRequest(
        states=tuple(states), scale=args.scale, settings=settings
    )
    request_path = render_dir / "render_request.json"
    contract_mod.write_request(request, request_path)
    outputs.append(request_path)

    if args.renderer == "blender":
        results = contract_mod.run_blender(request_path)
    else:
        results = contract_mod.run_builtin(request)
    failures = [r for r in results if not r.ok]
    if failures:
        raise AssemblyTraceError(
            f"render failures for {meta.model_id}: {failures[0].log}"
        )
    outputs.extend(Path(r.output_path) for r in results)

    # Step metadata, final-state copies, and front-view masks.
    from .raster import RasterImage, foreground_mask

    mask_dir = render_dir / "masks"
    mask_dir.mkdir(exist_ok=True)
    for n in range(1, schedule.step_count + 1):
        batch = schedule.steps[n - 1]
        meta_payload = {
            "step_index": n,
            "total_steps": schedule.step_count,
            "label": batch.label,
            "new_parts": [names[i] for i in batch.parts],
            "cumulative_parts": [names[i] for i in schedule.cumulative_parts(n)],
            "change_description": "add " + ", ".join(names[i] for i in batch.parts),
        }
        outputs.append(_write_json(render_dir / f"step_{n}.json", meta_payload))
        img = RasterImage.load(render_dir / f"step_{n}.png")
        mask_path = mask_dir / f"step_{n}.png"
        foreground_mask(img).save(mask_path)
        outputs.append(mask_path)

    final_png = render_dir / "final_complete.png"
    final_png.write_bytes((render_dir / f"step_{schedule.step_count}.png").read_bytes())
    outputs.append(final_png)
    outputs.append(
        _write_json(
            render_dir / "final_complete.json",
            {
                "model_id": meta.model_id,
                "category": meta.model_cat,
                "parts": [names[i] for i in schedule.cumulative_parts(schedule.step_count)],
                "total_steps": schedule.step_count,
            },
        )
    )
    return outputs


def _annotation_client(args):
    if args.judge == "endpoint" or getattr(args, "annotator", "mock") == "endpoint":
        from .client import EndpointConfig, HttpChatClient

        return HttpChatClient(EndpointConfig(base_url=args.endpoint_url, model=args.endpoint_model))
    return MockChatClient()


def stage_annotate(args, workdir: Path) -> list[Path]:
    from .client import CachingClient

    client = _annotation_client(args)
    cache_dir = workdir / "cache"
    client = CachingClient(client, cache_dir, suffix=".resp")

    outputs = []
    for schedule in _load_schedules(workdir):
        meta = schedule.asset
        render_dir = workdir / "renders" / meta.model_id
        final_info = json.loads((render_dir / "final_complete.json").read_text())
        final_png = (render_dir / "final_complete.png").read_bytes()

        step_meta = [
            json.loads((render_dir / f"step_{n}.json").read_text())
            for n in range(1, schedule.step_count + 1)
        ]
        goal = annotate_mod.generate_goal_prompt(
            final_png,
            final_info["parts"],
            [m["change_description"] for m in step_meta],
            client,
        )

        rationales = []
        validations = []
        prev_png = None
        for n in range(1, schedule.step_count + 1):
            curr_png = (render_dir / f"step_{n}.png").read_bytes()
            delta = step_meta[n - 1]["new_parts"]
            existing = step_meta[n - 2]["cumulative_parts"] if n > 1 else []
            rationale = annotate_mod.generate_step_rationale(
                n,
                schedule.step_count,
                prev_png,
                curr_png,
                delta,
                client,
                existing_names=existing,
                object_type=final_info["category"].lower(),
                goal_text=goal.text,
            )
            report = annotate_mod.validate_rationale(
                rationale, delta, n, schedule.step_count,
                existing_names=existing, strict=args.strict,
            )
            if not report.ok:
                raise AssemblyTraceError(
                    f"rationale validation failed for {meta.model_id} step {n}: {report.codes()}"
                )
            rationales.append(rationale)
            validations.append(report.to_dict())
            prev_png = curr_png

        outputs.append(
            _write_json(
                workdir / "annotations" / f"{meta.model_id}.json",
                {
                    "goal": goal.to_dict(),
                    "rationales": [r.to_dict() for r in rationales],
                    "validation": validations,
                },
            )
        )
    print(f"annotate: {len(outputs)} assets annotated")
    return outputs


def _load_annotation(workdir: Path, model_id: str) -> dict:
    path = workdir / "annotations" / f"{model_id}.json"
    if not path.is_file():
        raise AssemblyTraceError(f"run the annotate stage first ({path} missing)")
    return json.loads(path.read_text())


def _build_records(workdir: Path) -> list:
    out = []
    for schedule in _load_schedules(workdir):
        meta = schedule.asset
        render_dir = workdir / "renders" / meta.model_id
        annotation = _load_annotation(workdir, meta.model_id)
        hierarchy = assets_mod.parse_hierarchy(meta)
        names = {leaf.node_id: leaf.name for leaf in hierarchy.leaves}
        rationales = [
            StepRationale(step=r["step"], text=r["text"]) for r in annotation["rationales"]
        ]
        images = [
            str(render_dir / f"step_{n}.png") for n in range(1, schedule.step_count + 1)
        ]
        trace = assemble_trace(
            GoalPrompt(**annotation["goal"]), schedule, rationales, images, part_names=names
        )
        out.append(serialize_record(trace, category=meta.model_cat, model_id=meta.model_id))
    return out


def stage_pack(args, workdir: Path) -> list[Path]:
    settings = RenderSettings(width=args.width, height=args.height, samples=args.samples)
    seqs = []
    for schedule in _load_schedules(workdir):
        annotation = _load_annotation(workdir, schedule.asset.model_id)
        seq = budget_mod.tokenize_trace(
            schedule.asset.model_id,
            annotation["goal"]["text"],
            [r["text"] for r in annotation["rationales"]],
            schedule.step_count,
            settings=settings,
        ).truncated(args.cap)
        seqs.append(seq)
    plan = packing_mod.pack_batches(
        seqs, expected=args.expected, cap=args.cap, low_water=args.low_water, seed=args.seed
    )
    out = _write_json(workdir / "packing" / "plan.json", plan.to_dict())
    print(f"pack: {len(plan.batches)} batches, {len(plan.overflow_log)} deferrals")
    return [out]


def stage_split(args, workdir: Path) -> list[Path]:
    recs = _build_records(workdir)
    manifest = None
    if args.split_manifest:
        manifest = json.loads(Path(args.split_manifest).read_text())
    splits = records_mod.split_dataset(recs, seed=args.seed, manifest=manifest)
    written = records_mod.write_split_records(splits, workdir / "records")
    print(
        f"split: {len(splits[0])}/{len(splits[1])}/{len(splits[2])} train/val/test "
        f"across {len(written)} files"
    )
    return written


def _judge_gateway(args, workdir: Path, part_names: list[str]) -> JudgeGateway:
    if args.judge == "endpoint":
        from .client import EndpointConfig, HttpChatClient

        client = HttpChatClient(
            EndpointConfig(base_url=args.endpoint_url, model=args.endpoint_model)
        )
    else:
        client = MockJudgeClient.from_part_names(part_names)
    return JudgeGateway(
        client,
        cache_dir=workdir / "judge_cache",
        transcripts_dir=workdir / "transcripts",
    )


def stage_eval(args, workdir: Path) -> list[Path]:
    outputs = []
    for schedule in _load_schedules(workdir):
        meta = schedule.asset
        render_dir = workdir / "renders" / meta.model_id
        annotation = _load_annotation(workdir, meta.model_id)
        final_info = json.loads((render_dir / "final_complete.json").read_text())

        spec = parse_instruction(
            annotation["goal"]["text"],
            spec_file=args.instruction_spec if args.instruction_spec else None,
        )
        step_pngs = [
            (render_dir / f"step_{n}.png").read_bytes()
            for n in range(1, schedule.step_count + 1)
        ]
        masks = [
            BinaryMask.load(render_dir / "masks" / f"step_{n}.png")
            for n in range(1, schedule.step_count + 1)
        ]
        changes = [
            json.loads((render_dir / f"step_{n}.json").read_text())["change_description"]
            for n in range(1, schedule.step_count + 1)
        ]
        gateway = _judge_gateway(args, workdir, final_info["parts"])
        report = evaluate_trace(
            TraceEvaluationInput(
                spec=spec,
                final_images={"front": (render_dir / "final_complete.png").read_bytes()},
                step_images={"front": step_pngs},
                step_changes=changes,
                masks={"front": masks},
            ),
            gateway,
            keep_largest_component=args.largest_component,
        )
        outputs.append(
            _write_json(workdir / "eval" / meta.model_id / "report.json", report.to_dict())
        )
        summary = ", ".join(
            f"{m}={report.aggregated[m]:.3f}" for m in METRICS if m in report.aggregated
        )
        na = ", ".join(sorted(report.not_applicable))
        print(f"eval {meta.model_id}: {summary}" + (f" (n/a: {na})" if na else ""))
    return outputs


def stage_stats(args, workdir: Path) -> list[Path]:
    outputs = []
    if args.paired:
        rows: dict[str, dict[str, list]] = {}
        for line in Path(args.paired).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.lower().startswith("metric"):
                continue
            metric, item_id, a, b = [t for t in line.replace(",", "\t").split("\t") if t != ""]
            bucket = rows.setdefault(metric, {"ids": [], "a": [], "b": []})
            bucket["ids"].append(item_id)
            bucket["a"].append(float(a))
            bucket["b"].append(float(b))
        table_rows = {}
        for metric in sorted(rows):
            bucket = rows[metric]
            paired = stats_mod.PairedScores(
                ids=tuple(bucket["ids"]),
                scores_a=tuple(bucket["a"]),
                scores_b=tuple(bucket["b"]),
            )
            table_rows[metric] = stats_mod.consistency_row(paired, seed=args.seed or 0)
        text = stats_mod.format_consistency_table(table_rows)
        out = workdir / "stats" / "consistency.txt"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
        print(text)
        outputs.append(out)
    if args.ratings:
        matrix_rows = []
        for line in Path(args.ratings).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [t for t in line.replace(",", "\t").split("\t") if t != ""]
            matrix_rows.append(tuple(int(c) for c in cells[1:]))
        kappa = stats_mod.fleiss_kappa(stats_mod.RatingMatrix(ratings=tuple(matrix_rows)))
        text = f"fleiss_kappa: {'undefined' if kappa is None else f'{kappa:.4f}'}"
        out = workdir / "stats" / "fleiss.txt"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
        print(text)
        outputs.append(out)
    if not outputs:
        raise AssemblyTraceError("stats needs --paired and/or --ratings")
    return outputs


def stage_audit(args, workdir: Path) -> list[Path]:
    def load_scores(run_dir: Path) -> dict[str, dict[str, float]]:
        scores: dict[str, dict[str, float]] = {}
        for report_path in sorted(Path(run_dir).glob("*/report.json")):
            payload = json.loads(report_path.read_text())
            scores[report_path.parent.name] = payload["aggregated"]
        return scores

    a = load_scores(Path(args.run_a))
    b = load_scores(Path(args.run_b))
    shared = sorted(set(a) & set(b))
    if not shared:
        raise AssemblyTraceError("no overlapping prompt ids between the two runs")

    top: dict[str, list] = {}
    for metric in METRICS:
        gaps = []
        for prompt_id in shared:
            if metric in a[prompt_id] and metric in b[prompt_id]:
                gap = abs(a[prompt_id][metric] - b[prompt_id][metric])
                gaps.append(
                    {
                        "prompt": prompt_id,
                        "gap": round(gap, 6),
                        "run_a": a[prompt_id][metric],
                        "run_b": b[prompt_id][metric],
                    }
                )
        gaps.sort(key=lambda g: (-g["gap"], g["prompt"]))
        if gaps:
            top[metric] = gaps[: args.top]
    out = _write_json(workdir / "audit" / "report.json", {"top_gaps": top})
    for metric, gaps in top.items():
        print(f"audit {metric}: largest gap {gaps[0]['gap']:.4f} on {gaps[0]['prompt']}")
    return [out]


PIPELINE_STAGES = ("curate", "schedule", "render", "annotate", "pack", "split", "eval")

STAGE_FUNCS = {
    "curate": stage_curate,
    "schedule": stage_schedule,
    "render": stage_render,
    "annotate": stage_annotate,
    "pack": stage_pack,
    "split": stage_split,
    "eval": stage_eval,
    "stats": stage_stats,
    "audit": stage_audit,
}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assemblytrace",
        description="Assembly-trace construction and benchmark evaluation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--workdir", default="work", help="working directory for all stages")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1, help="per-asset parallelism bound")

    def render_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--renderer", choices=("builtin", "blender"), default="builtin")
        p.add_argument("--width", type=int, default=512)
        p.add_argument("--height", type=int, default=512)
        p.add_argument("--samples", type=int, default=8)
        p.add_argument("--scale", type=float, default=3.0)
        p.add_argument("--views", default="front", help="comma-separated view ids")

    def judge_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--judge", choices=("mock", "endpoint"), default="mock")
        p.add_argument("--endpoint-url", default="http://localhost:8000/v1")
        p.add_argument("--endpoint-model", default="gpt-4o")
        p.add_argument("--instruction-spec", default=None,
                       help="pre-parsed instruction spec file (overrides goal parsing)")
        p.add_argument("--largest-component", action="store_true",
                       help="keep only the largest mask component for trace stability")

    def sched_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scheduler-config", default=None, help="key=value scheduler config file")
        p.add_argument("--max-batch", action="append", metavar="CAT=N",
                       help="override a category batch cap (repeatable)")

    p = sub.add_parser("curate", help="scan, dedup, and validate an asset directory")
    common(p)
    p.add_argument("--input", required=True)

    p = sub.add_parser("schedule", help="build assembly schedules for curated assets")
    common(p)
    sched_opts(p)

    p = sub.add_parser("render", help="render cumulative states and masks")
    common(p)
    render_opts(p)

    p = sub.add_parser("annotate", help="generate goal prompts and step rationales")
    common(p)
    judge_opts(p)
    p.add_argument("--strict", action="store_true", help="escalate validation warnings")

    p = sub.add_parser("pack", help="token-account traces and plan budgeted batches")
    common(p)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--expected", type=int, default=budget_mod.EXPECTED_TOKENS)
    p.add_argument("--cap", type=int, default=budget_mod.HARD_CAP_TOKENS)
    p.add_argument("--low-water", type=int, default=budget_mod.LOW_WATER_TOKENS)

    p = sub.add_parser("split", help="split records and write the release layout")
    common(p)
    p.add_argument("--split-manifest", default=None, help="JSON model_id -> split override")

    p = sub.add_parser("eval", help="score rendered traces against their goals")
    common(p)
    judge_opts(p)

    p = sub.add_parser("stats", help="agreement statistics from score tables")
    common(p)
    p.add_argument("--paired", default=None, help="TSV/CSV: metric, id, score_a, score_b")
    p.add_argument("--ratings", default=None, help="TSV/CSV: item, rating per rater")

    p = sub.add_parser("audit", help="largest per-metric score gaps between two judge runs")
    common(p)
    p.add_argument("--run-a", required=True, help="first eval output directory")
    p.add_argument("--run-b", required=True, help="second eval output directory")
    p.add_argument("--top", type=int, default=10)

    p = sub.add_parser("pipeline", help="run all stages end to end")
    common(p)
    p.add_argument("--input", required=True)
    render_opts(p)
    judge_opts(p)
    sched_opts(p)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--expected", type=int, default=budget_mod.EXPECTED_TOKENS)
    p.add_argument("--cap", type=int, default=budget_mod.HARD_CAP_TOKENS)
    p.add_argument("--low-water", type=int, default=budget_mod.LOW_WATER_TOKENS)
    p.add_argument("--split-manifest", default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    config_snapshot = {
        k: v for k, v in sorted(vars(args).items()) if not callable(v)
    }
    manifest = RunManifest(workdir, {args.command: config_snapshot})

    if args.command == "pipeline":
        stages = PIPELINE_STAGES
    else:
        stages = (args.command,)

    for stage in stages:
        func = STAGE_FUNCS[stage]
        started = time.monotonic()
        try:
            outputs = func(args, workdir)
        except (AssemblyTraceError, FileNotFoundError, OSError, ValueError) as exc:
            manifest.record(stage, [], time.monotonic() - started, status=f"failed: {exc}")
            print(json.dumps({"stage": stage, "error": str(exc)}), file=sys.stderr)
            return EXIT_FAILURE
        manifest.record(stage, outputs, time.monotonic() - started)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
