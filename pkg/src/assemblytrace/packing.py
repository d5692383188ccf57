"""Token-budgeted batch packing with an overflow buffer.

Batches fill greedily toward the expected budget. Each drawn sequence is
first tested against the hard cap: one that would not fit is deferred to the
overflow buffer. The buffer is drawn before fresh items whenever the running
total is under the low-water mark (and whenever fresh items are exhausted).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .budget import EXPECTED_TOKENS, HARD_CAP_TOKENS, LOW_WATER_TOKENS, TokenizedSequence
from .errors import ConfigError, InvariantError


@dataclass(frozen=True)
class PackingEvent:
    action: str  # "add" | "defer" | "close"
    batch: int  # 0-based batch index
    trace_id: str | None
    source: str | None  # "fresh" | "overflow"
    total_after: int


@dataclass
class PackingPlan:
    batches: list[list[str]] = field(default_factory=list)
    overflow_log: list[str] = field(default_factory=list)
    events: list[PackingEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "batches": self.batches,
            "overflow_log": self.overflow_log,
            "events": [
                {
                    "action": e.action,
                    "batch": e.batch,
                    "trace_id": e.trace_id,
                    "source": e.source,
                    "total_after": e.total_after,
                }
                for e in self.events
            ],
        }


def pack_batches(
    seqs: list[TokenizedSequence],
    expected: int = EXPECTED_TOKENS,
    cap: int = HARD_CAP_TOKENS,
    low_water: int = LOW_WATER_TOKENS,
    seed: int | None = None,
) -> PackingPlan:
    """Pack pre-truncated sequences into token-budgeted batches.

    Every input id lands in exactly one batch and no batch exceeds ``cap``.
    A batch closes once its total has reached ``expected`` (the item that
    triggered the close is pushed back for the next batch, or deferred if it
    also breaks the cap). ``seed`` shuffles the draw order; ``None`` keeps
    the input order.
    """
    if not (0 < expected <= cap):
        raise ConfigError("need 0 < expected <= cap")
    if low_water > expected:
        raise ConfigError("low_water must not exceed expected")

    sizes = {s.trace_id: s.token_count for s in seqs}
    if len(sizes) != len(seqs):
        raise InvariantError("duplicate trace ids in packing input")
    for s in seqs:
        if s.token_count > cap:
            raise InvariantError(
                f"sequence {s.trace_id!r} has {s.token_count} tokens, above the "
                f"{cap} cap; truncate before packing"
            )

    order = [s.trace_id for s in seqs]
    if seed is not None:
        rng = np.random.default_rng(seed)
        order = [order[i] for i in rng.permutation(len(order))]

    fresh: deque[str] = deque(order)
    overflow: deque[str] = deque()
    plan = PackingPlan()
    current: list[str] = []
    total = 0
    batch_index = 0

    def close_batch() -> None:
        nonlocal current, total, batch_index
        if current:
            plan.batches.append(current)
            plan.events.append(PackingEvent("close", batch_index, None, None, total))
            batch_index += 1
            current = []
            total = 0

    while fresh or overflow:
        from_overflow = bool(overflow) and (total < low_water or not fresh)
        source = "overflow" if from_overflow else "fresh"
        trace_id = (overflow if from_overflow else fresh).popleft()
        size = sizes[trace_id]

        if total + size > cap:
            if from_overflow:
                overflow.appendleft(trace_id)
                close_batch()
            else:
                overflow.append(trace_id)
                plan.overflow_log.append(trace_id)
                plan.events.append(PackingEvent("defer", batch_index, trace_id, source, total))
                if total >= expected:
                    close_batch()
            continue

        if total >= expected:
            # Batch already at target; the drawn item opens the next batch.
            (overflow if from_overflow else fresh).appendleft(trace_id)
            close_batch()
            continue

        current.append(trace_id)
        total += size
        plan.events.append(PackingEvent("add", batch_index, trace_id, source, total))

    close_batch()
    return plan
