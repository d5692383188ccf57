"""Image/text token accounting."""

from __future__ import annotations

import pytest

from assemblytrace.budget import (
    TokenBudgetConfig,
    TokenizedSequence,
    count_text_tokens,
    image_block_token_count,
    image_token_count,
    tokenize_trace,
)
from assemblytrace.errors import ConfigError
from assemblytrace.raster import RenderSettings


def test_512_canvas_gives_1024_generation_tokens():
    assert image_token_count(RenderSettings(width=512, height=512)) == 1024


def test_256_canvas_gives_256_tokens():
    assert image_token_count(RenderSettings(width=256, height=256)) == 256


def test_non_divisible_dims_rejected():
    with pytest.raises(ConfigError):
        image_token_count(RenderSettings(width=500, height=500))


def test_monotone_in_width_and_height():
    sizes = [16, 32, 64, 128, 256, 512, 1024]
    counts = [image_token_count(RenderSettings(width=w, height=w)) for w in sizes]
    assert counts == sorted(counts)
    # and in each axis separately
    widths = [image_token_count(RenderSettings(width=w, height=256)) for w in sizes]
    assert widths == sorted(widths)


def test_block_count_default_understanding_equals_generation():
    settings = RenderSettings(width=512, height=512)
    assert image_block_token_count(settings) == 3 * 1024


def test_block_count_configurable_understanding():
    settings = RenderSettings(width=512, height=512)
    cfg = TokenBudgetConfig(understanding_tokens=729)
    assert image_block_token_count(settings, cfg) == 2 * 1024 + 729


def test_text_token_heuristic():
    assert count_text_tokens("one two three four") == 6  # ceil(4 * 1.3)
    assert count_text_tokens("") == 0


def test_tokenized_sequence_sum_and_truncate():
    seq = TokenizedSequence("t", segments=(("text", 10), ("image", 3072), ("text", 5)))
    assert seq.token_count == 3087
    cut = seq.truncated(3075)
    assert cut.token_count == 3075
    assert cut.segments == (("text", 10), ("image", 3065))


def test_truncate_60k_to_50k():
    seq = TokenizedSequence("big", segments=(("image", 60_000),))
    assert seq.truncated().token_count == 50_000


def test_tokenize_trace_shape():
    seq = tokenize_trace(
        "id1",
        "Build a chair.",
        ["First, base.", "Then, legs."],
        image_count=2,
        settings=RenderSettings(width=256, height=256),
        tokenizer=lambda text: len(text.split()),
    )
    # goal text + 2 * (rationale text + image block)
    assert seq.segments[0] == ("text", 3)
    assert [k for k, _ in seq.segments] == ["text", "text", "image", "text", "image"]
    assert seq.segments[2] == ("image", 3 * 256)
