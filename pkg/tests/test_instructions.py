"""Goal-prompt parsing into constraint sets."""

from __future__ import annotations

import json

import pytest

from assemblytrace.instructions import (
    AttributeItem,
    CategoryRequirement,
    InstructionSpec,
    RelationTriplet,
    parse_instruction,
)


def requirements(spec: InstructionSpec) -> dict[str, int]:
    return {c.name: c.required_count for c in spec.categories}


def test_chair_example():
    spec = parse_instruction("Build a chair with four legs and a square seat")
    req = requirements(spec)
    assert req["legs"] == 4
    assert req["seat"] == 1
    assert req["chair"] == 1
    assert AttributeItem("seat", "square") in spec.attributes


def test_empty_string():
    spec = parse_instruction("")
    assert spec.categories == ()
    assert spec.attributes == ()
    assert spec.shape_question == "Does the object match: ?"


def test_shape_question_embeds_goal():
    text = "Create a tall vase."
    spec = parse_instruction(text)
    assert spec.shape_question == f"Does the object match: {text}?"


def test_digit_counts():
    spec = parse_instruction("Construct a rack with 12 hooks")
    assert requirements(spec)["hooks"] == 12


def test_relation_triplet():
    spec = parse_instruction("Build a lamp with a shade above the base")
    assert RelationTriplet("shade", "above", "base") in spec.relations


def test_on_top_of_is_relation_not_connectivity():
    spec = parse_instruction("Build a table with a vase on top of the tabletop")
    assert RelationTriplet("vase", "on top of", "tabletop") in spec.relations
    assert ("vase", "tabletop") not in spec.connectivity


def test_attached_to_connectivity():
    spec = parse_instruction("Create a mug with a handle attached to the body")
    assert ("handle", "body") in spec.connectivity


def test_spec_file_override(tmp_path):
    payload = {
        "categories": [{"name": "blade", "count": 1}],
        "attributes": [{"category": "blade", "attribute": "curved"}],
        "connectivity": [["blade", "handle"]],
        "relations": [{"subject": "blade", "predicate": "above", "object": "handle"}],
        "shape_question": "Does the object match: a knife?",
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(payload))
    spec = parse_instruction("this text is ignored entirely", spec_file=path)
    assert spec.categories == (CategoryRequirement("blade", 1),)
    assert spec.attributes == (AttributeItem("blade", "curved"),)
    assert spec.connectivity == (("blade", "handle"),)
    assert spec.shape_question == "Does the object match: a knife?"


def test_attribute_target_must_be_category():
    with pytest.raises(ValueError):
        InstructionSpec(
            categories=(CategoryRequirement("seat", 1),),
            attributes=(AttributeItem("ghost", "red"),),
        )


def test_mock_goal_text_parses_cleanly():
    # The offline pipeline feeds mock-generated goals into this parser.
    text = "Build an object with the base, four legs, the seat and the back."
    req = requirements(parse_instruction(text))
    assert req == {"object": 1, "base": 1, "legs": 4, "seat": 1, "back": 1}
