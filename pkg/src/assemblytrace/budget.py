"""Token accounting for serialized traces.

Image token counts derive from the latent geometry of the target model
family: the VAE downsamples by 8 per axis and the latents are patch-embedded
2x2, so a W x H render becomes (W/16) * (H/16) generation tokens. During
training each image block additionally carries a noised copy of the
generation tokens and the understanding tokens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .raster import RenderSettings

VAE_DOWNSAMPLE = 8
PATCH_SIZE = 2

HARD_CAP_TOKENS = 50_000
EXPECTED_TOKENS = 40_000
LOW_WATER_TOKENS = 20_000


@dataclass(frozen=True)
class TokenBudgetConfig:
    vae_downsample: int = VAE_DOWNSAMPLE
    patch_size: int = PATCH_SIZE
    understanding_tokens: int | None = None  # None: same as the generation count
    text_tokens_per_word: float = 1.3

    def __post_init__(self) -> None:
        if self.vae_downsample < 1 or self.patch_size < 1:
            raise ConfigError("downsample and patch size must be >= 1")
        if self.text_tokens_per_word <= 0:
            raise ConfigError("text_tokens_per_word must be positive")


def image_token_count(settings: RenderSettings, cfg: TokenBudgetConfig | None = None) -> int:
    """Generation tokens for one rendered image."""
    cfg = cfg or TokenBudgetConfig()
    stride = cfg.vae_downsample * cfg.patch_size
    if settings.width % stride or settings.height % stride:
        raise ConfigError(
            f"canvas {settings.width}x{settings.height} not divisible by {stride}"
        )
    return (settings.width // stride) * (settings.height // stride)


def image_block_token_count(settings: RenderSettings, cfg: TokenBudgetConfig | None = None) -> int:
    """Training-time tokens for one image block: noised generation tokens,
    clean generation tokens, and understanding tokens."""
    cfg = cfg or TokenBudgetConfig()
    gen = image_token_count(settings, cfg)
    und = cfg.understanding_tokens if cfg.understanding_tokens is not None else gen
    return 2 * gen + und


def count_text_tokens(text: str, cfg: TokenBudgetConfig | None = None) -> int:
    """Whitespace-token stand-in count; swap in a real tokenizer via the
    ``tokenizer`` argument of :func:`tokenize_trace` for exact numbers."""
    cfg = cfg or TokenBudgetConfig()
    words = len(text.split())
    return math.ceil(words * cfg.text_tokens_per_word)


@dataclass(frozen=True)
class TokenizedSequence:
    trace_id: str
    segments: tuple[tuple[str, int], ...]  # (kind, count) rows, kinds "text" / "image"

    @property
    def token_count(self) -> int:
        return sum(c for _, c in self.segments)

    def truncated(self, cap: int = HARD_CAP_TOKENS) -> "TokenizedSequence":
        """Clamp to ``cap`` tokens by dropping/trimming trailing segments."""
        out: list[tuple[str, int]] = []
        remaining = cap
        for kind, count in self.segments:
            if remaining <= 0:
                break
            take = min(count, remaining)
            out.append((kind, take))
            remaining -= take
        return TokenizedSequence(trace_id=self.trace_id, segments=tuple(out))


def tokenize_trace(
    trace_id: str,
    goal_text: str,
    rationale_texts: list[str],
    image_count: int,
    settings: RenderSettings | None = None,
    cfg: TokenBudgetConfig | None = None,
    tokenizer=None,
    training_blocks: bool = True,
) -> TokenizedSequence:
    """Account one serialized trace.

    ``tokenizer`` is any callable text -> token count; the whitespace
    heuristic is used when it is omitted. ``training_blocks`` selects the
    training-time per-image block size instead of bare generation tokens.
    """
    settings = settings or RenderSettings()
    cfg = cfg or TokenBudgetConfig()
    counter = tokenizer or (lambda text: count_text_tokens(text, cfg))
    per_image = (
        image_block_token_count(settings, cfg)
        if training_blocks
        else image_token_count(settings, cfg)
    )
    segments: list[tuple[str, int]] = [("text", counter(goal_text))]
    for i in range(image_count):
        if i < len(rationale_texts):
            segments.append(("text", counter(rationale_texts[i])))
        segments.append(("image", per_image))
    return TokenizedSequence(trace_id=trace_id, segments=tuple(segments))
