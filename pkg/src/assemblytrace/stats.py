"""Agreement and uncertainty statistics for judge-consistency and human
evaluation analyses.

Undefined statistics (zero variance, degenerate chance agreement) are
returned as ``None`` and rendered as "undefined" in reports, never silently
coerced to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

BOOTSTRAP_ITERS = 10_000
RATING_SCALE = 5


@dataclass(frozen=True)
class PairedScores:
    ids: tuple[str, ...]
    scores_a: tuple[float, ...]
    scores_b: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.ids) == len(self.scores_a) == len(self.scores_b)):
            raise ShapeError("paired score lists must have equal length")
        if len(self.ids) < 2:
            raise ShapeError("need at least 2 paired scores")


@dataclass(frozen=True)
class RatingMatrix:
    """items x raters integer ratings on a 1..K scale."""

    ratings: tuple[tuple[int, ...], ...]
    scale: int = RATING_SCALE

    def __post_init__(self) -> None:
        if not self.ratings:
            raise ShapeError("rating matrix is empty")
        width = len(self.ratings[0])
        for row in self.ratings:
            if len(row) != width:
                raise ShapeError("every item needs the same number of raters")
            for cell in row:
                if not 1 <= cell <= self.scale:
                    raise ShapeError(f"rating {cell} outside 1..{self.scale}")

    @property
    def n_items(self) -> int:
        return len(self.ratings)

    @property
    def n_raters(self) -> int:
        return len(self.ratings[0])


def prf1(tp: int, fp: int, fn: int) -> tuple[float | None, float | None, float | None]:
    """Precision, recall, F1 from query counts; components with a zero
    denominator come back as None."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def f1_from_percentages(precision_pct: float, recall_pct: float) -> float:
    """F1 (as a percentage) straight from percentage P/R values."""
    if precision_pct + recall_pct == 0:
        raise ValueError("precision and recall are both zero")
    return 2 * precision_pct * recall_pct / (precision_pct + recall_pct)


def bootstrap_ci(
    values, iters: int = BOOTSTRAP_ITERS, seed: int | None = 0
) -> tuple[float, float, float] | None:
    """(mean, lo, hi) with a 95% interval from resampling with replacement.

    Percentiles use the nearest-rank method on the sorted bootstrap means;
    the resampling stream is fully determined by ``seed``.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return None
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(iters, arr.size))
    means = np.sort(arr[idx].mean(axis=1))
    lo = means[_nearest_rank(0.025, iters)]
    hi = means[_nearest_rank(0.975, iters)]
    return float(arr.mean()), float(lo), float(hi)


def _nearest_rank(q: float, n: int) -> int:
    return min(max(math.ceil(q * n) - 1, 0), n - 1)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(p: PairedScores) -> float | None:
    """Rank correlation: Pearson on average ranks. None under zero variance."""
    a = _average_ranks(np.asarray(p.scores_a, dtype=np.float64))
    b = _average_ranks(np.asarray(p.scores_b, dtype=np.float64))
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float((da * da).sum()) * float((db * db).sum()))
    if denom == 0.0:
        return None
    return float((da * db).sum()) / denom


def kendall(p: PairedScores) -> float | None:
    """Tie-corrected rank correlation (the tau-b variant)."""
    a = np.asarray(p.scores_a, dtype=np.float64)
    b = np.asarray(p.scores_b, dtype=np.float64)
    da = np.sign(a[:, None] - a[None, :])
    db = np.sign(b[:, None] - b[None, :])
    iu = np.triu_indices(len(a), k=1)
    sa, sb = da[iu], db[iu]
    concordant_minus_discordant = float((sa * sb).sum())
    n0 = len(sa)
    ties_a = float((sa == 0).sum())
    ties_b = float((sb == 0).sum())
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom == 0.0:
        return None
    return concordant_minus_discordant / denom


def raw_agreement(labels_a, labels_b) -> float:
    """Fraction of positions where the two binary label lists agree."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.size == 0:
        raise ShapeError("label lists must be equal-length and non-empty")
    return float((a == b).mean())


def cohen_kappa(labels_a, labels_b) -> float | None:
    """Chance-corrected two-rater agreement over binary labels.

    None when both raters are constant and identical (chance agreement 1).
    """
    a = np.asarray(labels_a).astype(int)
    b = np.asarray(labels_b).astype(int)
    if a.shape != b.shape or a.size == 0:
        raise ShapeError("label lists must be equal-length and non-empty")
    po = float((a == b).mean())
    pa1 = float(a.mean())
    pb1 = float(b.mean())
    pe = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if pe >= 1.0 - 1e-15:
        return None
    return (po - pe) / (1 - pe)


def fleiss_kappa(m: RatingMatrix) -> float | None:
    """Chance-corrected agreement among a fixed rater count assigning
    categorical labels; None when every rating in the matrix is identical."""
    if m.n_items < 2:
        raise ShapeError("need at least 2 items")
    n = m.n_raters
    counts = np.zeros((m.n_items, m.scale), dtype=np.float64)
    for i, row in enumerate(m.ratings):
        for cell in row:
            counts[i, cell - 1] += 1
    p_i = ((counts * counts).sum(axis=1) - n) / (n * (n - 1))
    p_j = counts.sum(axis=0) / (m.n_items * n)
    p_bar = float(p_i.mean())
    p_e = float((p_j * p_j).sum())
    if p_e >= 1.0 - 1e-15:
        return None
    return (p_bar - p_e) / (1 - p_e)


def ranking_stability(
    method_means_a: dict[str, float], method_means_b: dict[str, float]
) -> tuple[float | None, int]:
    """(rank correlation, top-1 match) between two method-level mean tables.

    Ties in means are broken by method name so the induced rankings are
    total orders.
    """
    if set(method_means_a) != set(method_means_b):
        raise ShapeError("method sets differ")
    methods = sorted(method_means_a)
    if len(methods) < 2:
        raise ShapeError("need at least 2 methods")

    def rank_vector(means: dict[str, float]) -> list[float]:
        ordered = sorted(methods, key=lambda m: (-means[m], m))
        position = {m: i for i, m in enumerate(ordered)}
        return [float(position[m]) for m in methods]

    ra = rank_vector(method_means_a)
    rb = rank_vector(method_means_b)
    tau = kendall(PairedScores(ids=tuple(methods), scores_a=tuple(ra), scores_b=tuple(rb)))
    top_a = min(methods, key=lambda m: (-method_means_a[m], m))
    top_b = min(methods, key=lambda m: (-method_means_b[m], m))
    return tau, int(top_a == top_b)


def consistency_row(paired: PairedScores, threshold: float = 0.5, seed: int = 0) -> dict:
    """One report row for a metric: rank correlations, thresholded
    agreement, and a bootstrap interval of the per-item score gap."""
    labels_a = [1 if s >= threshold else 0 for s in paired.scores_a]
    labels_b = [1 if s >= threshold else 0 for s in paired.scores_b]
    gaps = [abs(x - y) for x, y in zip(paired.scores_a, paired.scores_b)]
    ci = bootstrap_ci(gaps, seed=seed)
    return {
        "spearman": spearman(paired),
        "kendall": kendall(paired),
        "agree_pct": 100.0 * raw_agreement(labels_a, labels_b),
        "cohen_kappa": cohen_kappa(labels_a, labels_b),
        "gap_ci": None if ci is None else (ci[1], ci[2]),
    }


def format_consistency_table(rows: dict[str, dict]) -> str:
    """Fixed-width text table mirroring the judge-consistency report layout
    (columns: rho, tau, Agree%, kappa, 95% CI)."""

    def fmt(value, pattern="{:.2f}") -> str:
        if value is None:
            return "undefined"
        return pattern.format(value)

    lines = [
        f"{'Metric':<8} {'Spearman':>9} {'Kendall':>8} {'Agree%':>7} {'Kappa':>9} {'95% CI':>18}"
    ]
    for metric, row in rows.items():
        ci = row.get("gap_ci")
        ci_text = "undefined" if ci is None else f"[{ci[0]:.3f}, {ci[1]:.3f}]"
        lines.append(
            f"{metric:<8} {fmt(row['spearman']):>9} {fmt(row['kendall']):>8} "
            f"{fmt(row['agree_pct'], '{:.1f}'):>7} {fmt(row['cohen_kappa']):>9} {ci_text:>18}"
        )
    return "\n".join(lines)
