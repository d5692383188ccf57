"""Metric formulas against independent loop-and-accumulate oracles."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from assemblytrace.errors import NumericError, ShapeError
from assemblytrace.instructions import (
    AttributeItem,
    CategoryRequirement,
    InstructionSpec,
    RelationTriplet,
)
from assemblytrace.metrics import (
    JudgeDecision,
    ViewScores,
    aggregate_multiview,
    confidence,
    score_af,
    score_cn,
    score_cp,
    score_ra,
    score_sf,
    score_ts,
    score_vt,
    ts_empty_previous_steps,
)
from assemblytrace.raster import BinaryMask


def make_spec(n_cat=1, n_attr=0, n_pair=0, n_rel=0, counts=None) -> InstructionSpec:
    cats = tuple(
        CategoryRequirement(f"c{i}", (counts or {}).get(f"c{i}", 1)) for i in range(n_cat)
    )
    return InstructionSpec(
        categories=cats,
        attributes=tuple(AttributeItem(f"c{i % max(n_cat, 1)}", f"attr{i}") for i in range(n_attr)),
        connectivity=tuple((f"a{i}", f"b{i}") for i in range(n_pair)),
        relations=tuple(RelationTriplet(f"s{i}", "above", f"o{i}") for i in range(n_rel)),
        shape_question="Does the object match: test?",
    )


def yes(conf: float, qid: str = "q") -> JudgeDecision:
    return JudgeDecision(question_id=qid, label="Yes", confidence=conf)


def mask_from_bits(rows: list[str]) -> BinaryMask:
    bits = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    return BinaryMask(width=bits.shape[1], height=bits.shape[0], bits=bits)


# -- confidence -------------------------------------------------------------


def test_confidence_symmetric_zero():
    assert confidence(0.0, 0.0) == 0.5


def test_confidence_ln2():
    assert confidence(math.log(2), 0.0) == pytest.approx(2 / 3, abs=1e-15)


def test_confidence_extreme_no_overflow():
    assert confidence(1000.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert confidence(0.0, 1000.0) == pytest.approx(0.0, abs=1e-12)


def test_confidence_complement():
    rng = random.Random(3)
    for _ in range(200):
        a, b = rng.uniform(-50, 50), rng.uniform(-50, 50)
        assert confidence(a, b) + confidence(b, a) == pytest.approx(1.0, abs=0)


def test_confidence_nan_rejected():
    with pytest.raises(NumericError):
        confidence(float("nan"), 0.0)


# -- cn ---------------------------------------------------------------------


def test_cn_exact_match():
    spec = make_spec(counts={"c0": 4})
    assert score_cn(spec, {"c0": 4}) == 1.0


def test_cn_req4_pred3():
    spec = make_spec(counts={"c0": 4})
    assert score_cn(spec, {"c0": 3}) == 0.75


def test_cn_missing_category_zero():
    spec = make_spec(counts={"c0": 4})
    assert score_cn(spec, {"c0": 0}) == 0.0
    assert score_cn(spec, {}) == 0.0


def test_cn_overcount_clipped():
    spec = make_spec(counts={"c0": 1})
    assert score_cn(spec, {"c0": 3}) == 0.0  # max(0, 1 - 2/1)


def test_cn_empty_spec_undefined():
    spec = InstructionSpec(shape_question="q")
    assert score_cn(spec, {}) is None


def test_cn_monotone_in_count_error():
    spec = make_spec(counts={"c0": 5})
    scores = [score_cn(spec, {"c0": pred}) for pred in range(1, 12)]
    errors = [abs(pred - 5) for pred in range(1, 12)]
    for (e1, s1), (e2, s2) in zip(zip(errors, scores), zip(errors[1:], scores[1:])):
        if e2 >= e1:
            assert s2 <= s1


# -- sf / af / cp / vt --------------------------------------------------------


def test_sf_passthrough():
    assert score_sf(yes(0.9)) == 0.9
    no = JudgeDecision(question_id="q", label="No", confidence=0.9)
    assert score_sf(no) == pytest.approx(0.1)


def test_af_mean():
    spec = make_spec(n_cat=1, n_attr=2)
    assert score_af(spec, [yes(1.0), yes(0.0)], {"c0": 1}) == 0.5


def test_af_missing_category_forces_zero():
    spec = make_spec(n_cat=1, n_attr=1)
    assert score_af(spec, [yes(1.0)], {"c0": 0}) == 0.0


def test_af_empty_undefined():
    spec = make_spec(n_cat=1, n_attr=0)
    assert score_af(spec, [], {}) is None


def test_cp_mean_attached():
    spec = make_spec(n_pair=2)
    decisions = [
        JudgeDecision(question_id="p0", label="Attached", confidence=0.8),
        JudgeDecision(question_id="p1", label="Attached", confidence=0.6),
    ]
    assert score_cp(spec, decisions) == pytest.approx(0.7)


def test_vt_mean_yes():
    spec = make_spec(n_rel=2)
    assert score_vt(spec, [yes(1.0), yes(0.5)]) == 0.75


# -- ts ----------------------------------------------------------------------


def test_ts_identical_masks():
    m = mask_from_bits(["1100", "0110"])
    assert score_ts([m, m, m]) == 1.0


def test_ts_growing_masks():
    a = mask_from_bits(["1000", "0000"])
    b = mask_from_bits(["1100", "0000"])
    c = mask_from_bits(["1110", "1000"])
    assert score_ts([a, b, c]) == 1.0


def test_ts_disjoint():
    a = mask_from_bits(["1100"])
    b = mask_from_bits(["0011"])
    assert score_ts([a, b]) == 0.0


def test_ts_partial_overlap():
    # |prev| = 100, |intersection| = 40 -> 0.4
    prev_bits = np.zeros((10, 20), dtype=bool)
    prev_bits[:, :10] = True  # 100 px
    curr_bits = np.zeros((10, 20), dtype=bool)
    curr_bits[:, 6:16] = True  # overlap columns 6..9 -> 40 px
    prev = BinaryMask(20, 10, prev_bits)
    curr = BinaryMask(20, 10, curr_bits)
    assert score_ts([prev, curr]) == pytest.approx(0.4)


def test_ts_single_mask_undefined():
    assert score_ts([mask_from_bits(["11"])]) is None


def test_ts_dimension_mismatch():
    with pytest.raises(ShapeError):
        score_ts([mask_from_bits(["11"]), mask_from_bits(["110"])])


def test_ts_empty_previous_flagged():
    empty = mask_from_bits(["00"])
    full = mask_from_bits(["11"])
    assert score_ts([empty, full]) == 0.0
    assert ts_empty_previous_steps([empty, full]) == [2]


def test_ts_reversal_penalizes_shrinking():
    rng = np.random.default_rng(0)
    masks = []
    bits = np.zeros((16, 16), dtype=bool)
    for _ in range(5):
        add = rng.random((16, 16)) < 0.15
        bits = bits | add
        masks.append(BinaryMask(16, 16, bits.copy()))
    forward = score_ts(masks)
    backward = score_ts(list(reversed(masks)))
    assert forward == 1.0
    assert backward <= forward


# -- ra ----------------------------------------------------------------------


def test_ra_all_yes():
    assert score_ra([yes(1.0), yes(1.0)]) == 1.0


def test_ra_mean():
    assert score_ra([yes(1.0), yes(0.0)]) == 0.5


def test_ra_single_step_undefined():
    assert score_ra([]) is None


# -- aggregation ---------------------------------------------------------------


def test_aggregate_max_rule_recovers_occluded_view():
    vs = ViewScores()
    vs.set("cn", "front", 0.75)
    vs.set("cn", "left", 0.0)
    assert aggregate_multiview(vs)["cn"] == 0.75


def test_aggregate_mean_rule():
    vs = ViewScores()
    for view, value in zip(("front", "left", "right", "back"), (1.0, 1.0, 0.0, 0.0)):
        vs.set("sf", view, value)
    assert aggregate_multiview(vs)["sf"] == 0.5


def test_aggregate_single_view_identity():
    vs = ViewScores()
    vs.set("cn", "front", 0.3)
    vs.set("sf", "front", 0.7)
    agg = aggregate_multiview(vs)
    assert agg == {"cn": 0.3, "sf": 0.7}


def test_aggregate_bounds_random():
    rng = random.Random(17)
    for _ in range(300):
        vs = ViewScores()
        views = ["front", "left", "right", "back"][: rng.randint(1, 4)]
        values = {}
        for metric in ("cn", "af", "cp", "sf", "vt", "ts", "ra"):
            values[metric] = [rng.random() for _ in views]
            for view, value in zip(views, values[metric]):
                vs.set(metric, view, value)
        agg = aggregate_multiview(vs)
        for metric in ("cn", "af", "cp"):
            assert agg[metric] == max(values[metric])
            assert all(agg[metric] >= v for v in values[metric])
        for metric in ("sf", "vt", "ts", "ra"):
            assert min(values[metric]) - 1e-12 <= agg[metric] <= max(values[metric]) + 1e-12


# -- randomized brute-force equivalence ---------------------------------------


def brute_force_cn(spec, counts):
    if not spec.categories:
        return None
    acc = 0.0
    for c in spec.categories:
        pred = counts.get(c.name, 0)
        recall = 1 if pred > 0 else 0
        term = 1.0 - abs(pred - c.required_count) / max(1, c.required_count)
        acc += recall * max(0.0, term)
    return acc / len(spec.categories)


def brute_force_mean(decisions, positive):
    if not decisions:
        return None
    acc = 0.0
    for d in decisions:
        acc += d.confidence if d.label == positive else 1.0 - d.confidence
    return acc / len(decisions)


def brute_force_af(spec, decisions, counts):
    if not spec.attributes:
        return None
    acc = 0.0
    for item, d in zip(spec.attributes, decisions):
        if counts.get(item.category, 0) <= 0:
            continue
        acc += d.confidence if d.label == "Yes" else 1.0 - d.confidence
    return acc / len(spec.attributes)


def brute_force_ts(masks):
    if len(masks) < 2:
        return None
    acc = 0.0
    for n in range(1, len(masks)):
        inter = 0
        prev_area = 0
        for y in range(masks[0].height):
            for x in range(masks[0].width):
                if masks[n - 1].bits[y, x]:
                    prev_area += 1
                    if masks[n].bits[y, x]:
                        inter += 1
        acc += inter / max(1, prev_area)
    return acc / (len(masks) - 1)


def test_brute_force_equivalence_randomized():
    rng = random.Random(2024)
    np_rng = np.random.default_rng(2024)
    for _ in range(400):
        n_cat = rng.randint(1, 5)
        counts_req = {f"c{i}": rng.randint(1, 6) for i in range(n_cat)}
        spec = make_spec(
            n_cat=n_cat,
            n_attr=rng.randint(0, 4),
            n_pair=rng.randint(0, 4),
            n_rel=rng.randint(0, 4),
            counts=counts_req,
        )
        counts_pred = {f"c{i}": rng.randint(0, 8) for i in range(n_cat)}
        assert score_cn(spec, counts_pred) == pytest.approx(
            brute_force_cn(spec, counts_pred), abs=1e-12
        )

        af_decisions = [
            JudgeDecision(f"a{i}", rng.choice(["Yes", "No"]), rng.random())
            for i in range(len(spec.attributes))
        ]
        expected_af = brute_force_af(spec, af_decisions, counts_pred)
        got_af = score_af(spec, af_decisions, counts_pred)
        if expected_af is None:
            assert got_af is None
        else:
            assert got_af == pytest.approx(expected_af, abs=1e-12)

        cp_decisions = [
            JudgeDecision(f"p{i}", rng.choice(["Attached", "Detached"]), rng.random())
            for i in range(len(spec.connectivity))
        ]
        expected_cp = brute_force_mean(cp_decisions, "Attached")
        got_cp = score_cp(spec, cp_decisions)
        assert (got_cp is None) == (expected_cp is None)
        if expected_cp is not None:
            assert got_cp == pytest.approx(expected_cp, abs=1e-12)

        vt_decisions = [
            JudgeDecision(f"r{i}", rng.choice(["Yes", "No"]), rng.random())
            for i in range(len(spec.relations))
        ]
        expected_vt = brute_force_mean(vt_decisions, "Yes")
        got_vt = score_vt(spec, vt_decisions)
        assert (got_vt is None) == (expected_vt is None)
        if expected_vt is not None:
            assert got_vt == pytest.approx(expected_vt, abs=1e-12)

        n_masks = rng.randint(2, 4)
        masks = [
            BinaryMask(8, 8, np_rng.random((8, 8)) < rng.uniform(0.0, 0.9))
            for _ in range(n_masks)
        ]
        assert score_ts(masks) == pytest.approx(brute_force_ts(masks), abs=1e-12)

        ra_decisions = [
            JudgeDecision(f"ra{n}", rng.choice(["Yes", "No"]), rng.random())
            for n in range(rng.randint(1, 5))
        ]
        assert score_ra(ra_decisions) == pytest.approx(
            brute_force_mean(ra_decisions, "Yes"), abs=1e-12
        )


def test_all_scores_in_unit_interval_randomized():
    rng = random.Random(55)
    for _ in range(200):
        spec = make_spec(n_cat=rng.randint(1, 4), counts={})
        counts = {c.name: rng.randint(0, 9) for c in spec.categories}
        value = score_cn(spec, counts)
        assert value is None or 0.0 <= value <= 1.0
