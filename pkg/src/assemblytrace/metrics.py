"""Benchmark metric formulas and multi-view aggregation.

Seven scores cover the final state and the trace: component numeracy (cn),
shape fidelity (sf), attribute fidelity (af), connectivity plausibility
(cp), visual topology (vt), trace stability (ts), and rationale alignment
(ra). All scores live in [0, 1]. Functions return ``None`` where a metric is
undefined (empty item set, single-step trace); reports mark those entries
not applicable rather than scoring them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import NumericError, ShapeError
from .instructions import InstructionSpec
from .raster import BinaryMask

METRICS = ("cn", "sf", "af", "cp", "vt", "ts", "ra")
MAX_AGGREGATED = frozenset({"cn", "af", "cp"})  # presence-sensitive: exist if visible anywhere
MEAN_AGGREGATED = frozenset({"sf", "vt", "ts", "ra"})  # global consistency across views

YES = "Yes"
NO = "No"
ATTACHED = "Attached"
DETACHED = "Detached"


@dataclass(frozen=True)
class JudgeDecision:
    """One forced-choice outcome: the chosen label and its confidence."""

    question_id: str
    label: str
    confidence: float
    transcript_ref: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def positive_confidence(self, positive: str) -> float:
        """Confidence of ``positive`` under the two-option split."""
        return self.confidence if self.label == positive else 1.0 - self.confidence


def confidence(logscore_u: float, logscore_v: float) -> float:
    """Two-way softmax over a pair of answer-token log-scores.

    Only the difference is exponentiated (never a positive argument), so
    extreme scores cannot overflow, and the winning side is derived as the
    exact complement of the losing side: confidence(a, b) and
    confidence(b, a) sum to 1 in floating point, not just mathematically.
    """
    if math.isnan(logscore_u) or math.isnan(logscore_v):
        raise NumericError("log-scores must not be NaN")
    if logscore_u == logscore_v:
        return 0.5
    if logscore_u < logscore_v:
        r = math.exp(logscore_u - logscore_v)
        return r / (1.0 + r)
    return 1.0 - confidence(logscore_v, logscore_u)


def score_cn(spec: InstructionSpec, counts: dict[str, int]) -> float | None:
    """Scale-invariant count accuracy, averaged over required categories.

    A missing category (predicted count 0) contributes zero; otherwise the
    per-category score decays linearly with relative count error, clipped
    to [0, 1].
    """
    if not spec.categories:
        return None
    total = 0.0
    for req in spec.categories:
        pred = counts.get(req.name, 0)
        if pred <= 0:
            continue
        err = abs(pred - req.required_count) / max(1, req.required_count)
        total += max(0.0, 1.0 - err)
    return total / len(spec.categories)


def score_sf(decision: JudgeDecision) -> float:
    """Confidence that the overall shape matches the goal."""
    return decision.positive_confidence(YES)


def score_af(
    spec: InstructionSpec,
    decisions: list[JudgeDecision],
    counts: dict[str, int] | None = None,
) -> float | None:
    """Mean attribute-binding confidence; an attribute on a category judged
    absent is forced to zero regardless of the judge's answer."""
    if not spec.attributes:
        return None
    if len(decisions) != len(spec.attributes):
        raise ShapeError(
            f"{len(spec.attributes)} attributes but {len(decisions)} decisions"
        )
    total = 0.0
    for item, decision in zip(spec.attributes, decisions):
        if counts is not None and counts.get(item.category, 0) <= 0:
            continue
        total += decision.positive_confidence(YES)
    return total / len(spec.attributes)


def score_cp(spec: InstructionSpec, decisions: list[JudgeDecision]) -> float | None:
    """Mean attachment confidence over required connectivity pairs."""
    if not spec.connectivity:
        return None
    if len(decisions) != len(spec.connectivity):
        raise ShapeError(
            f"{len(spec.connectivity)} pairs but {len(decisions)} decisions"
        )
    return sum(d.positive_confidence(ATTACHED) for d in decisions) / len(decisions)


def score_vt(spec: InstructionSpec, decisions: list[JudgeDecision]) -> float | None:
    """Mean confidence over spatial relation triplets."""
    if not spec.relations:
        return None
    if len(decisions) != len(spec.relations):
        raise ShapeError(
            f"{len(spec.relations)} relations but {len(decisions)} decisions"
        )
    return sum(d.positive_confidence(YES) for d in decisions) / len(decisions)


def score_ts(masks: list[BinaryMask]) -> float | None:
    """Mean retention of the previous step's foreground in the current step.

    Undefined for fewer than two masks. An empty previous mask contributes a
    zero term (the max(1, area) denominator); such steps are worth flagging
    upstream since nothing could be retained.
    """
    if len(masks) < 2:
        return None
    first = masks[0]
    for m in masks[1:]:
        if (m.width, m.height) != (first.width, first.height):
            raise ShapeError("mask dimensions differ across steps")
    total = 0.0
    for n in range(1, len(masks)):
        prev, curr = masks[n - 1], masks[n]
        total += curr.intersection_area(prev) / max(1, prev.area)
    return total / (len(masks) - 1)


def ts_empty_previous_steps(masks: list[BinaryMask]) -> list[int]:
    """1-based step indices whose retention term was forced to zero by an
    empty previous mask."""
    return [n + 1 for n in range(1, len(masks)) if masks[n - 1].area == 0]


def score_ra(decisions: list[JudgeDecision]) -> float | None:
    """Mean confidence that each step's main visual change matches its
    rationale; decisions cover steps 2..N, so single-step traces are
    undefined."""
    if not decisions:
        return None
    return sum(d.positive_confidence(YES) for d in decisions) / len(decisions)


@dataclass
class ViewScores:
    """Per-view score table: metric -> view id -> score in [0, 1]."""

    scores: dict[str, dict[str, float]] = field(default_factory=dict)

    def set(self, metric: str, view: str, score: float | None) -> None:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        if score is None:
            return
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"{metric} score {score} outside [0, 1]")
        self.scores.setdefault(metric, {})[view] = score

    def views_for(self, metric: str) -> dict[str, float]:
        return self.scores.get(metric, {})


def aggregate_multiview(vs: ViewScores) -> dict[str, float]:
    """Collapse per-view scores: max for presence-sensitive metrics, mean
    for global-consistency metrics. A single view degenerates to identity
    under both rules."""
    out: dict[str, float] = {}
    for metric, per_view in vs.scores.items():
        if not per_view:
            continue
        values = list(per_view.values())
        out[metric] = max(values) if metric in MAX_AGGREGATED else sum(values) / len(values)
    return out


@dataclass
class MetricReport:
    per_view: ViewScores = field(default_factory=ViewScores)
    aggregated: dict[str, float] = field(default_factory=dict)
    decisions: list[JudgeDecision] = field(default_factory=list)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)  # view -> category -> count
    not_applicable: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def finalize(self) -> None:
        self.aggregated = aggregate_multiview(self.per_view)
        for metric in METRICS:
            if metric not in self.aggregated and metric not in self.not_applicable:
                self.not_applicable.append(metric)

    def to_dict(self) -> dict:
        return {
            "per_view": self.per_view.scores,
            "aggregated": self.aggregated,
            "not_applicable": sorted(self.not_applicable),
            "counts": self.counts,
            "flags": self.flags,
            "decisions": [
                {
                    "question_id": d.question_id,
                    "label": d.label,
                    "confidence": d.confidence,
                    "transcript_ref": d.transcript_ref,
                }
                for d in self.decisions
            ],
        }
