"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line. Run with ``pytest tests/test_acceptance.py -s`` to see the
lines stream by; tolerances are pinned here, not configurable.
"""

from __future__ import annotations

import json
import math
import random
import time

import numpy as np
import pytest

CRITERIA_LOG: list[str] = []


def passed(n: int, text: str) -> None:
    line = f"ACCEPTANCE {n:02d} PASS: {text}"
    CRITERIA_LOG.append(line)
    print("\n" + line)


@pytest.fixture(scope="session", autouse=True)
def summary():
    yield
    print("\n" + "\n".join(CRITERIA_LOG))


# -- 1. metric formula equivalence against brute-force oracles ---------------


def test_criterion_1_metric_formula_equivalence():
    from assemblytrace.metrics import (
        JudgeDecision,
        score_af,
        score_cn,
        score_cp,
        score_ra,
        score_sf,
        score_ts,
        score_vt,
    )
    from assemblytrace.raster import BinaryMask
    from test_metrics import (
        brute_force_af,
        brute_force_cn,
        brute_force_mean,
        brute_force_ts,
        make_spec,
    )

    rng = random.Random(1)
    np_rng = np.random.default_rng(1)
    started = time.monotonic()
    checked = 0
    for _ in range(1000):
        n_cat = rng.randint(1, 4)
        spec = make_spec(
            n_cat=n_cat,
            n_attr=rng.randint(0, 3),
            n_pair=rng.randint(0, 3),
            n_rel=rng.randint(0, 3),
            counts={f"c{i}": rng.randint(1, 6) for i in range(n_cat)},
        )
        counts = {f"c{i}": rng.randint(0, 8) for i in range(n_cat)}

        got = score_cn(spec, counts)
        expected = brute_force_cn(spec, counts)
        assert abs(got - expected) <= 1e-12

        sf = JudgeDecision("q", rng.choice(["Yes", "No"]), rng.random())
        assert abs(score_sf(sf) - brute_force_mean([sf], "Yes")) <= 1e-12

        af = [JudgeDecision(f"a{i}", rng.choice(["Yes", "No"]), rng.random())
              for i in range(len(spec.attributes))]
        ga, ea = score_af(spec, af, counts), brute_force_af(spec, af, counts)
        assert (ga is None and ea is None) or abs(ga - ea) <= 1e-12

        cp = [JudgeDecision(f"p{i}", rng.choice(["Attached", "Detached"]), rng.random())
              for i in range(len(spec.connectivity))]
        gc, ec = score_cp(spec, cp), brute_force_mean(cp, "Attached")
        assert (gc is None and ec is None) or abs(gc - ec) <= 1e-12

        vt = [JudgeDecision(f"r{i}", rng.choice(["Yes", "No"]), rng.random())
              for i in range(len(spec.relations))]
        gv, ev = score_vt(spec, vt), brute_force_mean(vt, "Yes")
        assert (gv is None and ev is None) or abs(gv - ev) <= 1e-12

        masks = [BinaryMask(8, 8, np_rng.random((8, 8)) < rng.uniform(0, 0.9))
                 for _ in range(rng.randint(2, 4))]
        assert abs(score_ts(masks) - brute_force_ts(masks)) <= 1e-12

        ra = [JudgeDecision(f"n{i}", rng.choice(["Yes", "No"]), rng.random())
              for i in range(rng.randint(1, 4))]
        assert abs(score_ra(ra) - brute_force_mean(ra, "Yes")) <= 1e-12
        checked += 1

    elapsed = time.monotonic() - started
    assert checked == 1000
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    passed(1, f"1000 randomized instances match oracles to 1e-12 in {elapsed:.1f}s")


# -- 2. paper-anchored constants ----------------------------------------------


def test_criterion_2_anchored_constants():
    from assemblytrace.instructions import CategoryRequirement, InstructionSpec
    from assemblytrace.metrics import score_cn
    from assemblytrace.stats import f1_from_percentages

    for p, r, expected in ((100.00, 39.05, 56.17), (100.00, 41.76, 58.92), (99.51, 94.23, 96.80)):
        assert abs(f1_from_percentages(p, r) - expected) <= 0.01

    spec = InstructionSpec(categories=(CategoryRequirement("c", 4),), shape_question="q")
    assert score_cn(spec, {"c": 0}) == 0.0
    assert score_cn(spec, {"c": 3}) == 0.75
    passed(2, "pilot-audit F1 values within 0.01; count-accuracy boundary cases exact")


# -- 3. aggregation law ---------------------------------------------------------


def test_criterion_3_aggregation_law():
    from assemblytrace.metrics import MAX_AGGREGATED, METRICS, ViewScores, aggregate_multiview

    rng = random.Random(3)
    views_all = ["front", "left", "right", "back"]
    cases = 0
    for _ in range(10_000):
        vs = ViewScores()
        k = rng.randint(1, 4)
        views = views_all[:k]
        table = {}
        for metric in METRICS:
            values = [rng.random() for _ in views]
            table[metric] = values
            for view, value in zip(views, values):
                vs.set(metric, view, value)
        agg = aggregate_multiview(vs)
        for metric in METRICS:
            values = table[metric]
            if metric in MAX_AGGREGATED:
                assert agg[metric] == max(values)
                assert all(agg[metric] >= v for v in values)
            else:
                assert min(values) - 1e-12 <= agg[metric] <= max(values) + 1e-12
            if k == 1:
                assert agg[metric] == values[0]
        cases += 1
    assert cases == 10_000
    passed(3, "aggregation bounds and single-view identity hold on 10,000 cases")


# -- 4. scheduler partition property --------------------------------------------


def test_criterion_4_scheduler_partition():
    import json as json_mod

    from assemblytrace.schedule import SchedulerConfig, build_schedule
    from test_schedule import make_hierarchy

    rng = random.Random(4)
    pool = ["base", "frame", "body", "leg", "arm", "seat", "shelf", "key", "panel", "knob"]
    cfg = SchedulerConfig()
    for case in range(200):
        count = rng.randint(1, 200)
        names = [rng.choice(pool) + (str(rng.randint(1, 9)) if rng.random() < 0.5 else "")
                 for _ in range(count)]
        category = rng.choice(["Chair", "Knife", "Lamp", "Keyboard", "Oddball"])
        h = make_hierarchy(names, category=category)
        cap = cfg.cap_for(category)

        reruns = [build_schedule(h, cfg) for _ in range(3)]
        serialized = {json_mod.dumps(s.to_dict(), sort_keys=True) for s in reruns}
        assert len(serialized) == 1, "non-deterministic schedule"

        schedule = reruns[0]
        seen: set[int] = set()
        for step in schedule.steps:
            assert 1 <= len(step.parts) <= cap
            assert not seen.intersection(step.parts), "overlapping deltas"
            seen.update(step.parts)
        assert seen == {leaf.node_id for leaf in h.leaves}, "union != leaves"
    passed(4, "200 random hierarchies: partition, caps, 3-rerun determinism")


# -- 5. trace round trips ---------------------------------------------------------


def test_criterion_5_trace_round_trip(tmp_path):
    from assemblytrace.records import read_records, write_records
    from assemblytrace.trace import FINAL_ANSWER, parse_record, serialize_record
    from test_trace import make_trace

    assert FINAL_ANSWER == "<assembly>Final Assembly: FINISH</assembly>"

    rng = random.Random(5)
    records = []
    for i in range(100):
        trace = make_trace(rng.randint(1, 8), rng)
        record = serialize_record(trace, category=rng.choice(["Chair", "Lamp"]), model_id=f"m{i}")
        back = parse_record(record)
        assert back.goal.text == trace.goal.text
        assert [s.rationale.text for s in back.steps] == [s.rationale.text for s in trace.steps]
        assert [s.image_ref for s in back.steps] == [s.image_bytes() for s in trace.steps]
        assert record.final_answer == FINAL_ANSWER
        records.append(record)

    write_records(records, tmp_path)
    restored = {r.model_id: r for r in read_records(tmp_path)}
    assert len(restored) == 100
    for record in records:
        assert restored[record.model_id] == record

    import pyarrow.parquet as pq

    sample = next((tmp_path / "Chair" / "train").glob("*.parquet"))
    names = pq.read_table(sample).column_names
    assert names[:3] == ["Prompt", "Shape of Thought Reasoning Trace", "Final Assembly"]
    assert names[3] == "reasoning_image_1" and names[-1] == "final_image"
    passed(5, "100 randomized traces round-trip through records and columnar files")


# -- 6. packing ---------------------------------------------------------------------


def test_criterion_6_packing():
    from assemblytrace.packing import pack_batches
    from test_packing import reference_simulator, seqs_from_sizes

    plan = pack_batches(seqs_from_sizes([45_000, 30_000, 20_000]), seed=None)
    assert plan.batches == [["t0"], ["t1", "t2"]]
    assert plan.overflow_log == ["t1"]
    first_add = next(e for e in plan.events if e.action == "add" and e.batch == 1)
    assert first_add.source == "overflow" and first_add.total_after - 30_000 < 20_000

    rng = random.Random(6)
    for trial in range(500):
        n = rng.randint(1, 60)
        sizes = [rng.randint(1, 50_000) for _ in range(n)]
        plan = pack_batches(seqs_from_sizes(sizes), seed=trial)
        size_map = {f"t{i}": s for i, s in enumerate(sizes)}
        ids = [i for batch in plan.batches for i in batch]
        assert sorted(ids) == sorted(size_map), "ids not conserved"
        assert all(sum(size_map[i] for i in b) <= 50_000 for b in plan.batches)
        order = [f"t{i}" for i in np.random.default_rng(trial).permutation(n)]
        assert plan.batches == reference_simulator(size_map, order, 40_000, 50_000, 20_000)
    passed(6, "hand case + 500 random vectors match the reference simulator; caps hold")


# -- 7. token accounting ---------------------------------------------------------------


def test_criterion_7_token_accounting():
    from assemblytrace.budget import image_token_count
    from assemblytrace.raster import RenderSettings

    assert image_token_count(RenderSettings(width=512, height=512)) == 1024
    assert image_token_count(RenderSettings(width=256, height=256)) == 256
    passed(7, "512x512 -> 1024 generation tokens; 256x256 -> 256")


# -- 8. rasterizer ------------------------------------------------------------------------


def test_criterion_8_rasterizer():
    from assemblytrace.mesh import box_mesh
    from assemblytrace.raster import (
        ComposedState,
        RenderSettings,
        fit_cameras,
        foreground_mask,
        render,
    )

    settings = RenderSettings(width=512, height=512, samples=8)
    cube = ComposedState(step=1, meshes=(box_mesh(),))
    cams = fit_cameras(cube.bounds(), settings, fill=0.8)
    img_a = render(cube, cams["front"], settings)
    img_b = render(cube, cams["front"], settings)
    assert np.array_equal(img_a.pixels, img_b.pixels), "non-deterministic pixels"
    assert img_a.to_png_bytes() == img_b.to_png_bytes()

    frac = foreground_mask(img_a).area / (512 * 512)
    assert abs(frac - 0.64) <= 0.01, f"fraction {frac}"

    # Nested cumulative states -> nested masks up to boundary pixels.
    parts = [
        box_mesh(center=(0, 0, 0.05), size=(1, 1, 0.1)),
        box_mesh(center=(-0.4, -0.4, 0.35), size=(0.1, 0.1, 0.5)),
        box_mesh(center=(0.4, 0.4, 0.35), size=(0.1, 0.1, 0.5)),
        box_mesh(center=(0, 0, 0.65), size=(1, 1, 0.1)),
    ]
    final = ComposedState(step=4, meshes=tuple(parts))
    cams = fit_cameras(final.bounds(), settings)
    previous = None
    for n in range(1, 5):
        state = ComposedState(step=n, meshes=tuple(parts[:n]))
        mask = foreground_mask(render(state, cams["front"], settings))
        if previous is not None:
            missing = int((previous.bits & ~mask.bits).sum())
            assert missing <= 0.005 * 2 * (512 + 512), f"step {n}: {missing} lost pixels"
        previous = mask
    passed(8, "cube fraction within 1% of analytic; bit-determinism; nested masks")


# -- 9. statistics -------------------------------------------------------------------------


def test_criterion_9_statistics():
    from assemblytrace.stats import (
        PairedScores,
        RatingMatrix,
        bootstrap_ci,
        cohen_kappa,
        fleiss_kappa,
        kendall,
        spearman,
    )
    from test_stats import (
        brute_force_fleiss,
        brute_force_kendall_tau_b,
        brute_force_spearman,
    )

    rng = random.Random(9)
    for _ in range(100):
        n = rng.randint(2, 15)
        a = [rng.randint(0, 4) / 4 for _ in range(n)]
        b = [rng.randint(0, 4) / 4 for _ in range(n)]
        p = PairedScores(tuple(map(str, range(n))), tuple(a), tuple(b))
        es, ek = brute_force_spearman(a, b), brute_force_kendall_tau_b(a, b)
        gs, gk = spearman(p), kendall(p)
        assert (gs is None and es is None) or abs(gs - es) <= 1e-12
        assert (gk is None and ek is None) or abs(gk - ek) <= 1e-12

        labels_a = [rng.randint(0, 1) for _ in range(n)]
        labels_b = [rng.randint(0, 1) for _ in range(n)]
        kappa = cohen_kappa(labels_a, labels_b)
        po = sum(x == y for x, y in zip(labels_a, labels_b)) / n
        pa = sum(labels_a) / n
        pb = sum(labels_b) / n
        pe = pa * pb + (1 - pa) * (1 - pb)
        if pe >= 1.0 - 1e-15:
            assert kappa is None
        else:
            assert abs(kappa - (po - pe) / (1 - pe)) <= 1e-12

        ratings = tuple(
            tuple(rng.randint(1, 5) for _ in range(3)) for _ in range(rng.randint(2, 10))
        )
        gf = fleiss_kappa(RatingMatrix(ratings=ratings))
        ef = brute_force_fleiss(ratings, 5)
        assert (gf is None and ef is None) or abs(gf - ef) <= 1e-12

    values = np.array([0.0] * 500 + [1.0] * 500)
    first = bootstrap_ci(values, iters=2000, seed=42)
    second = bootstrap_ci(values, iters=2000, seed=42)
    assert first == second, "seeded bootstrap not bit-reproducible"
    gen = np.random.default_rng(42)
    means = sorted(values[gen.integers(0, 1000, size=1000)].mean() for _ in range(2000))
    assert first == (0.5, means[math.ceil(0.025 * 2000) - 1], means[math.ceil(0.975 * 2000) - 1])

    from assemblytrace.records import split_dataset
    from test_records import make_record

    records = [make_record(i, n_steps=1) for i in range(1000)]
    train, val, test = split_dataset(records, seed=0)
    assert (len(train), len(val), len(test)) == (699, 101, 200)
    passed(9, "rank/kappa oracles to 1e-12; bootstrap bit-reproducible; 699/101/200 split")


# -- 10. end-to-end pipeline -------------------------------------------------------------------


def test_criterion_10_end_to_end(toy_chair_dir, tmp_path):
    from assemblytrace.cli import main

    workdir = tmp_path / "pipeline"
    started = time.monotonic()
    code = main([
        "pipeline",
        "--workdir", str(workdir),
        "--input", str(toy_chair_dir),
        "--judge", "mock",
        "--renderer", "builtin",
    ])
    elapsed = time.monotonic() - started
    assert code == 0
    assert elapsed < 60.0, f"pipeline took {elapsed:.1f}s"

    report = json.loads((workdir / "eval" / "1001" / "report.json").read_text())
    for key in ("aggregated", "per_view", "decisions", "counts", "not_applicable"):
        assert key in report
    for metric in ("cn", "sf", "af", "cp", "vt", "ts", "ra"):
        assert metric in report["aggregated"], f"{metric} missing"
    assert report["not_applicable"] == []
    assert report["aggregated"]["cn"] == 1.0
    assert report["decisions"], "no judge decisions recorded"
    passed(10, f"toy-chair pipeline exit 0 with a complete report in {elapsed:.1f}s")
