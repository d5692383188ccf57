"""Assembly-trace construction and compositional benchmark evaluation.

The package turns part-hierarchy 3D assets into step-aligned interleaved
traces (scan -> schedule -> render -> annotate -> pack/split) and scores
generated traces with forced-choice judge metrics, mask-based trace
stability, and agreement statistics.
"""

from .annotate import (
    GoalPrompt,
    StepRationale,
    generate_goal_prompt,
    generate_step_rationale,
    validate_rationale,
)
from .assets import (
    AssetMeta,
    PartHierarchy,
    PartNode,
    parse_hierarchy,
    scan_and_dedup,
    validate_asset,
)
from .budget import (
    TokenBudgetConfig,
    TokenizedSequence,
    image_block_token_count,
    image_token_count,
    tokenize_trace,
)
from .instructions import InstructionSpec, parse_instruction
from .judge import JudgeGateway, JudgeQuery, MockJudgeClient, VoteResult
from .metrics import (
    JudgeDecision,
    MetricReport,
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
)
from .mesh import TriangleMesh, load_mesh
from .packing import PackingPlan, pack_batches
from .raster import (
    BinaryMask,
    Camera,
    ComposedState,
    RasterImage,
    RenderSettings,
    compose_state,
    fit_cameras,
    foreground_mask,
    render,
)
from .records import read_records, split_dataset, write_records, write_split_records
from .schedule import (
    AssemblySchedule,
    SchedulerConfig,
    StepBatch,
    build_schedule,
    delta_parts,
    validate_schedule,
)
from .stats import (
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
from .trace import (
    AssemblyTrace,
    TraceRecord,
    TraceStep,
    assemble_trace,
    parse_record,
    serialize_record,
)
from .validation import Issue, ValidationReport

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
