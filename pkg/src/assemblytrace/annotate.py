"""Goal-prompt and step-rationale generation via a language-model endpoint,
plus rule-based validation of the results against the schedule.

Templates live under ``templates/`` and are filled by named-placeholder
substitution; request construction is deterministic so identical inputs
produce identical cache keys.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources

from .client import image_content, text_content, response_text, transition_word
from .errors import EmptyAnnotationError
from .schedule import normalize_part_name
from .validation import ValidationReport

logger = logging.getLogger(__name__)

IMPERATIVE_VERBS = ("Build", "Create", "Construct")
RATIONALE_WORDS_MIN = 10
RATIONALE_WORDS_MAX = 20

_PLACEHOLDER = re.compile(r"\{([a-zA-Z_][a-zA-Z0-9_]*)\}")
_PREPOSITIONS = (
    "onto", "into", "to", "on", "under", "above", "below", "beneath",
    "at", "inside", "around", "within", "against",
)


def load_template(name: str) -> str:
    return resources.files("assemblytrace.templates").joinpath(name).read_text()


def fill_template(template: str, slots: dict[str, str]) -> str:
    """Replace ``{name}`` placeholders for the provided keys only; anything
    else (including literal braces in the template text) is left untouched."""

    def sub(match: re.Match) -> str:
        key = match.group(1)
        return str(slots[key]) if key in slots else match.group(0)

    return _PLACEHOLDER.sub(sub, template)


@dataclass(frozen=True)
class GoalPrompt:
    text: str
    source: str = "mock"

    def to_dict(self) -> dict:
        return {"text": self.text, "source": self.source}


@dataclass(frozen=True)
class RationaleSlots:
    action_verb: str | None = None
    new_parts: tuple[str, ...] | None = None
    attachment_preposition: str | None = None
    anchor_location: str | None = None


@dataclass(frozen=True)
class StepRationale:
    step: int
    text: str
    slots: RationaleSlots = field(default_factory=RationaleSlots)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "text": self.text,
            "slots": {
                "action_verb": self.slots.action_verb,
                "new_parts": list(self.slots.new_parts) if self.slots.new_parts else None,
                "attachment_preposition": self.slots.attachment_preposition,
                "anchor_location": self.slots.anchor_location,
            },
        }


def _steps_summary_text(steps_summary: list[str]) -> str:
    if not steps_summary:
        return "No construction sequence is available."
    lines = [f"{i}. {s}" for i, s in enumerate(steps_summary, start=1)]
    return "Construction sequence:\n" + "\n".join(lines)


def build_goal_request(
    parts: list[str],
    steps_summary: list[str],
    final_image_png: bytes | None,
    temperature: float = 0.0,
) -> dict:
    parts_text = "\n".join(f"- {p}" for p in parts) if parts else "- (none listed)"
    note = (
        "A rendering of the final object is attached as visual reference."
        if final_image_png is not None
        else "No rendering is available; rely on the parts list and sequence."
    )
    prompt = fill_template(
        load_template("goal_prompt.txt"),
        {
            "parts_text": parts_text,
            "construction_steps": _steps_summary_text(steps_summary),
            "visual_reference_note": note,
        },
    )
    content: list[dict] = [text_content(prompt)]
    if final_image_png is not None:
        content.append(image_content(final_image_png))
    return {
        "messages": [{"role": "user", "content": content}],
        "temperature": temperature,
    }


def generate_goal_prompt(
    final_image_png: bytes | None,
    parts: list[str],
    steps_summary: list[str],
    client,
) -> GoalPrompt:
    """Ask the endpoint for an imperative goal prompt describing the final object."""
    body = build_goal_request(parts, steps_summary, final_image_png)
    response = client.complete(body)
    text = response_text(response).strip()
    if not text:
        raise EmptyAnnotationError("endpoint returned an empty goal prompt")
    if not text.startswith(IMPERATIVE_VERBS):
        logger.warning("goal prompt does not open with an imperative verb: %r", text[:40])
    source = getattr(client, "model", None) or "endpoint"
    return GoalPrompt(text=text, source=str(source))


def step_note(n: int, total: int) -> str:
    word = transition_word(n, total)
    if word is None:
        return "This is the only step; no transition word is needed."
    return f'Start with "{word}".'


def build_rationale_request(
    n: int,
    total: int,
    delta_names: list[str],
    existing_names: list[str],
    object_type: str,
    goal_text: str,
    prev_image_png: bytes | None,
    curr_image_png: bytes | None,
    temperature: float = 0.0,
) -> dict:
    prompt = fill_template(
        load_template("step_rationale.txt"),
        {
            "step_number": str(n),
            "total_steps": str(total),
            "object_type": object_type,
            "prompt_text": goal_text or "(no goal prompt available)",
            "existing_parts": "\n".join(f"- {p}" for p in existing_names) or "- (none)",
            "new_parts": "\n".join(f"- {p}" for p in delta_names) or "- (none)",
            "step_note": step_note(n, total),
        },
    )
    content: list[dict] = [text_content(prompt)]
    for png in (prev_image_png, curr_image_png):
        if png is not None:
            content.append(image_content(png))
    return {
        "messages": [{"role": "user", "content": content}],
        "temperature": temperature,
    }


def parse_rationale_slots(text: str, delta_names: list[str], existing_names: list[str]) -> RationaleSlots:
    """Best-effort slot extraction from generated text; absent slots stay None."""
    words = re.findall(r"[A-Za-z]+", text)
    action = None
    if words:
        first = words[0]
        action = words[1] if transition_word_matches(first) and len(words) > 1 else first
        action = action.lower()
    preposition = next((w.lower() for w in words if w.lower() in _PREPOSITIONS), None)
    lowered = text.lower()
    mentioned = tuple(
        name for name in delta_names if normalize_part_name(name) in _normalized_text(lowered)
    )
    anchor = next(
        (name for name in existing_names if normalize_part_name(name) in _normalized_text(lowered)),
        None,
    )
    return RationaleSlots(
        action_verb=action,
        new_parts=mentioned or None,
        attachment_preposition=preposition,
        anchor_location=anchor,
    )


def transition_word_matches(word: str) -> bool:
    return word.capitalize() in ("First", "Next", "Then", "Finally")


def _normalized_text(text: str) -> str:
    return " " + " ".join(normalize_part_name(w) for w in re.findall(r"[a-z]+", text)) + " "


def generate_step_rationale(
    n: int,
    total: int,
    v_prev_png: bytes | None,
    v_curr_png: bytes | None,
    delta_names: list[str],
    client,
    existing_names: list[str] | None = None,
    object_type: str = "object",
    goal_text: str = "",
) -> StepRationale:
    """Generate the rationale for step ``n`` of ``total``."""
    if not 1 <= n <= total:
        from .errors import RangeError

        raise RangeError(f"step {n} outside 1..{total}")
    existing_names = existing_names or []
    body = build_rationale_request(
        n, total, delta_names, existing_names, object_type, goal_text, v_prev_png, v_curr_png
    )
    response = client.complete(body)
    text = response_text(response).strip()
    if not text:
        raise EmptyAnnotationError(f"endpoint returned an empty rationale for step {n}")
    slots = parse_rationale_slots(text, delta_names, existing_names)
    return StepRationale(step=n, text=text, slots=slots)


def validate_rationale(
    r: StepRationale,
    delta_names: list[str],
    n: int,
    total: int,
    existing_names: list[str] | None = None,
    vocabulary: list[str] | None = None,
    strict: bool = False,
) -> ValidationReport:
    """Cross-check a rationale against the parts actually added at its step.

    Part mentions are matched on normalized names (lowercase, digits and
    trailing plural stripped). A mention of a vocabulary part that is in
    neither the step delta nor the existing structure is an error; length
    and transition-word problems are warnings unless ``strict``.
    """
    existing_names = existing_names or []
    report = ValidationReport()

    delta_keys = {normalize_part_name(d) for d in delta_names}
    allowed_keys = delta_keys | {normalize_part_name(e) for e in existing_names}
    norm_text = _normalized_text(r.text.lower())

    if r.slots.new_parts:
        for name in r.slots.new_parts:
            if normalize_part_name(name) not in delta_keys:
                report.error(
                    "PART_NOT_IN_DELTA",
                    f"rationale introduces {name!r} which is not added at step {n}",
                )
    if vocabulary:
        for name in vocabulary:
            key = normalize_part_name(name)
            if key and f" {key} " in norm_text and key not in allowed_keys:
                report.error(
                    "PART_NOT_IN_DELTA",
                    f"rationale mentions {name!r} which is neither new nor existing at step {n}",
                )
    if delta_keys and not any(f" {k} " in norm_text for k in delta_keys):
        report.warning("DELTA_NOT_MENTIONED", "rationale names none of the newly added parts")

    word_count = len(re.findall(r"[A-Za-z0-9']+", r.text))
    if not RATIONALE_WORDS_MIN <= word_count <= RATIONALE_WORDS_MAX:
        report.warning(
            "LENGTH",
            f"rationale has {word_count} words, expected "
            f"{RATIONALE_WORDS_MIN}-{RATIONALE_WORDS_MAX}",
        )

    expected = transition_word(n, total)
    first = re.match(r"\s*([A-Za-z]+)", r.text)
    opening = first.group(1).capitalize() if first else ""
    if expected is None:
        if transition_word_matches(opening):
            report.warning(
                "TRANSITION_WORD", f"single-step rationale should not open with {opening!r}"
            )
    elif opening != expected:
        report.warning(
            "TRANSITION_WORD", f"step {n}/{total} should open with {expected!r}, got {opening!r}"
        )

    return report.escalate_warnings() if strict else report
