"""Agreement and uncertainty statistics for judge-consistency analyses.

Simulates two judges scoring the same 200 prompts (the second judge is a
noisy copy of the first), then reports rank correlations, thresholded
agreement, chance-corrected kappas, bootstrap intervals, and method-level
ranking stability.

Run:  python3 demos/03_agreement_stats.py
"""

import random

from assemblytrace import (
    PairedScores,
    RatingMatrix,
    bootstrap_ci,
    cohen_kappa,
    fleiss_kappa,
    kendall,
    prf1,
    ranking_stability,
    raw_agreement,
    spearman,
)
from assemblytrace.stats import consistency_row, format_consistency_table

rng = random.Random(7)

# ---------------------------------------------------------------------------
# 1. Two judges over 200 prompts: correlated scores with disagreement noise
# ---------------------------------------------------------------------------
primary = [rng.random() for _ in range(200)]
alternate = [min(1.0, max(0.0, s + rng.gauss(0, 0.12))) for s in primary]
paired = PairedScores(
    ids=tuple(f"p{i}" for i in range(200)),
    scores_a=tuple(primary),
    scores_b=tuple(alternate),
)
print(f"spearman rho: {spearman(paired):.3f}")
print(f"kendall tau:  {kendall(paired):.3f}")

labels_a = [1 if s >= 0.5 else 0 for s in primary]
labels_b = [1 if s >= 0.5 else 0 for s in alternate]
print(f"raw agreement: {raw_agreement(labels_a, labels_b):.3f}")
print(f"cohen kappa:   {cohen_kappa(labels_a, labels_b):.3f}")

# ---------------------------------------------------------------------------
# 2. Prompt-level bootstrap interval of the absolute score gap
# ---------------------------------------------------------------------------
gaps = [abs(a - b) for a, b in zip(primary, alternate)]
mean, lo, hi = bootstrap_ci(gaps, iters=10_000, seed=0)
print(f"mean |gap| = {mean:.4f}, 95% CI [{lo:.4f}, {hi:.4f}]")

# ---------------------------------------------------------------------------
# 3. The consistency table, one row per metric
# ---------------------------------------------------------------------------
rows = {}
for metric in ("cn", "sf", "af"):
    noisy = [min(1.0, max(0.0, s + rng.gauss(0, 0.1))) for s in primary]
    rows[metric] = consistency_row(
        PairedScores(paired.ids, tuple(primary), tuple(noisy)), seed=1
    )
print("\n" + format_consistency_table(rows))

# ---------------------------------------------------------------------------
# 4. Method-level ranking stability between the two judges
# ---------------------------------------------------------------------------
methods_a = {"method1": 0.88, "method2": 0.76, "method3": 0.64, "method4": 0.42}
methods_b = {"method1": 0.84, "method2": 0.79, "method3": 0.60, "method4": 0.45}
tau, top1 = ranking_stability(methods_a, methods_b)
print(f"\nranking stability: tau={tau:.3f}, top-1 match={bool(top1)}")

# ---------------------------------------------------------------------------
# 5. Rater agreement on 5-point scales, and recognition P/R/F1
# ---------------------------------------------------------------------------
ratings = tuple(
    tuple(min(5, max(1, round(3 + rng.gauss(0, 0.7)))) for _ in range(3))
    for _ in range(50)
)
print(f"fleiss kappa (3 raters x 50 items): {fleiss_kappa(RatingMatrix(ratings)):.3f}")

precision, recall, f1 = prf1(tp=194, fp=1, fn=12)
print(f"component recognition: P={precision:.4f} R={recall:.4f} F1={f1:.4f}")
