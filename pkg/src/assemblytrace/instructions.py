"""Rule-based parsing of goal prompts into checkable constraint sets.

The grammar is a documented stand-in: number words or digits before a plural
noun become (category, count) requirements, adjective-noun pairs become
attribute items, attachment phrases become connectivity pairs, and spatial
prepositions become relation triplets. A pre-parsed spec file, when
supplied, overrides parsing entirely.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19, "twenty": 20,
}
ARTICLES = {"a", "an", "the", "its", "one"}
OPENING_VERBS = {"build", "create", "construct", "make", "assemble", "design"}
STOPWORDS = {"with", "and", "featuring", "plus", "has", "having", "that", "of", "which", "is", "are"}

# Relation predicates, longest first so "on top of" wins over "on".
RELATION_PREDICATES = ("on top of", "left of", "right of", "above", "below", "inside", "under")
CONNECTIVITY_MARKERS = ("attached to", "connected to", "connecting", "mounted on", "fixed to", "on")

_WORD = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class CategoryRequirement:
    name: str
    required_count: int

    def to_dict(self) -> dict:
        return {"name": self.name, "count": self.required_count}


@dataclass(frozen=True)
class AttributeItem:
    category: str
    attribute: str

    def to_dict(self) -> dict:
        return {"category": self.category, "attribute": self.attribute}


@dataclass(frozen=True)
class RelationTriplet:
    subject: str
    predicate: str
    object: str

    def to_dict(self) -> dict:
        return {"subject": self.subject, "predicate": self.predicate, "object": self.object}


@dataclass(frozen=True)
class InstructionSpec:
    categories: tuple[CategoryRequirement, ...] = ()
    attributes: tuple[AttributeItem, ...] = ()
    connectivity: tuple[tuple[str, str], ...] = ()
    relations: tuple[RelationTriplet, ...] = ()
    shape_question: str = ""
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = {c.name for c in self.categories}
        for c in self.categories:
            if not c.name.strip():
                raise ValueError("category names must be non-empty")
            if c.required_count < 1:
                raise ValueError(f"required count for {c.name!r} must be >= 1")
        for a in self.attributes:
            if a.category not in names:
                raise ValueError(
                    f"attribute target {a.category!r} is not a required category"
                )

    def category_names(self) -> list[str]:
        return [c.name for c in self.categories]

    def to_dict(self) -> dict:
        return {
            "categories": [c.to_dict() for c in self.categories],
            "attributes": [a.to_dict() for a in self.attributes],
            "connectivity": [list(pair) for pair in self.connectivity],
            "relations": [r.to_dict() for r in self.relations],
            "shape_question": self.shape_question,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstructionSpec":
        return cls(
            categories=tuple(
                CategoryRequirement(c["name"], int(c["count"])) for c in d.get("categories", [])
            ),
            attributes=tuple(
                AttributeItem(a["category"], a["attribute"]) for a in d.get("attributes", [])
            ),
            connectivity=tuple(
                (str(p[0]), str(p[1])) for p in d.get("connectivity", [])
            ),
            relations=tuple(
                RelationTriplet(r["subject"], r["predicate"], r["object"])
                for r in d.get("relations", [])
            ),
            shape_question=str(d.get("shape_question", "")),
        )


def load_instruction_spec(path: str | Path) -> InstructionSpec:
    return InstructionSpec.from_dict(json.loads(Path(path).read_text()))


def shape_question_for(goal_text: str) -> str:
    return f"Does the object match: {goal_text}?"


_PREDICATE_SPLIT = re.compile(
    r"\b(?:" + "|".join(
        re.escape(p) for p in sorted(
            RELATION_PREDICATES + CONNECTIVITY_MARKERS, key=len, reverse=True
        )
    ) + r")\b"
)


def _segments(text: str) -> list[list[str]]:
    """Split into noun-phrase segments of lowercase words.

    Boundaries are commas, connectives, and relation/attachment phrases, so
    each side of "handle attached to the body" parses as its own phrase.
    """
    flattened = _PREDICATE_SPLIT.sub(",", text.lower())
    parts = re.split(r",|;| and | with | featuring | plus ", flattened)
    return [[w for w in _WORD.findall(p)] for p in parts if _WORD.findall(p)]


def _parse_noun_phrase(words: list[str]) -> tuple[str, int, list[str]] | None:
    """(noun, count, adjectives) for one segment, or None if no noun is found."""
    words = [w for w in words if w not in STOPWORDS]
    if not words:
        return None
    count = 1
    adjectives: list[str] = []
    idx = 0
    if words[idx] in OPENING_VERBS:
        idx += 1
    if idx < len(words) and words[idx] in ARTICLES:
        idx += 1
    elif idx < len(words) and words[idx] in NUMBER_WORDS:
        count = NUMBER_WORDS[words[idx]]
        idx += 1
    elif idx < len(words) and words[idx].isdigit():
        count = int(words[idx])
        idx += 1
    body = words[idx:]
    if not body:
        return None
    noun = body[-1]
    adjectives = [w for w in body[:-1] if w not in ARTICLES and w not in NUMBER_WORDS]
    return noun, count, adjectives


def parse_instruction(goal_text: str, spec_file: str | Path | None = None) -> InstructionSpec:
    """Extract constraint sets from a goal prompt.

    With ``spec_file`` the pre-parsed spec is returned verbatim; the grammar
    never sees the text. Fragments the grammar cannot interpret are skipped
    and listed in ``warnings``.
    """
    if spec_file is not None:
        return load_instruction_spec(spec_file)

    text = goal_text.strip()
    if not text:
        return InstructionSpec(shape_question=shape_question_for(goal_text))

    categories: dict[str, int] = {}
    singular_seen: dict[str, str] = {}  # singular form -> first-mention display name
    attributes: list[AttributeItem] = []
    warnings: list[str] = []

    def singular(noun: str) -> str:
        return noun[:-1] if len(noun) > 2 and noun.endswith("s") else noun

    for segment in _segments(text):
        parsed = _parse_noun_phrase(segment)
        if parsed is None:
            warnings.append(f"unparseable fragment: {' '.join(segment)!r}")
            continue
        noun, count, adjectives = parsed
        key = singular(noun)
        if key in singular_seen:
            noun = singular_seen[key]  # "legs" then "leg" are one category
        else:
            singular_seen[key] = noun
            categories[noun] = count
        for adj in adjectives:
            attributes.append(AttributeItem(category=noun, attribute=adj))

    lowered = text.lower()
    relations: list[RelationTriplet] = []
    connectivity: list[tuple[str, str]] = []
    known = sorted(categories, key=len, reverse=True)

    def nearest_category(span: str, from_end: bool) -> str | None:
        words = _WORD.findall(span)
        ordered = reversed(words) if from_end else iter(words)
        for w in ordered:
            if w in categories:
                return w
            for name in known:
                if w == name or w == name + "s" or w + "s" == name:
                    return name
        return None

    for predicate in RELATION_PREDICATES:
        for m in re.finditer(re.escape(predicate), lowered):
            subject = nearest_category(lowered[: m.start()], from_end=True)
            obj = nearest_category(lowered[m.end():], from_end=False)
            if subject and obj and subject != obj:
                triplet = RelationTriplet(subject, predicate, obj)
                if triplet not in relations:
                    relations.append(triplet)

    relation_spans = {
        (m.start(), m.end())
        for predicate in RELATION_PREDICATES
        for m in re.finditer(re.escape(predicate), lowered)
    }
    for marker in CONNECTIVITY_MARKERS:
        for m in re.finditer(r"\b" + re.escape(marker) + r"\b", lowered):
            # A bare "on" inside "on top of" belongs to the relation, not here.
            if any(s <= m.start() and m.end() <= e for s, e in relation_spans):
                continue
            a = nearest_category(lowered[: m.start()], from_end=True)
            b = nearest_category(lowered[m.end():], from_end=False)
            if a and b and a != b and (a, b) not in connectivity:
                connectivity.append((a, b))

    return InstructionSpec(
        categories=tuple(
            CategoryRequirement(name, count) for name, count in categories.items()
        ),
        attributes=tuple(attributes),
        connectivity=tuple(connectivity),
        relations=tuple(relations),
        shape_question=shape_question_for(goal_text),
        warnings=tuple(warnings),
    )
