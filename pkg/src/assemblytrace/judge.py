"""Vision-judge orchestration: forced-choice queries, structured counting,
and self-consistency voting, with transcript persistence and caching.

Every query fills a criteria-based template, attaches one or two images,
and constrains the answer to two options. Confidence comes from answer-token
log-scores via the two-way softmax when the endpoint exposes them, from the
returned label alone otherwise, or from repeated voting.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .annotate import fill_template, load_template
from .client import CachingClient, image_content, response_text, text_content
from .errors import EndpointError, JudgeFormatError
from .metrics import JudgeDecision, confidence

TEMPLATE_FILES = {
    "shape": "shape_audit.txt",
    "attribute": "attribute_check.txt",
    "attribute_audit": "attribute_audit.txt",
    "connectivity": "connectivity_audit.txt",
    "relation": "spatial_relation.txt",
    "change": "change_check.txt",
    "count": "count_query.txt",
}

FORMAT_REMINDER = (
    "Your previous reply could not be parsed. Answer again with exactly one of "
    "the allowed options, on a line of the form: Answer: <option>"
)
COUNT_FORMAT_REMINDER = (
    "Your previous reply could not be parsed. Reply with JSON only, exactly of "
    'the form {"count": <integer>} with no other text.'
)

_ANSWER_RE = re.compile(r"Answer\s*:?\s*\(?\s*([A-Za-z]+)", re.IGNORECASE)
_COUNT_RE = re.compile(r'"count"\s*:\s*(-?\d+)')

VOTE_TEMPERATURE = 0.2
VOTE_TOP_P = 0.9


@dataclass(frozen=True)
class JudgeQuery:
    template_id: str
    slots: dict[str, str]
    images: tuple[bytes, ...]
    options: tuple[str, str] = ("Yes", "No")
    temperature: float = 0.0
    top_p: float = 1.0
    question_id: str = ""

    def __post_init__(self) -> None:
        if len(self.options) != 2:
            raise ValueError("forced choice needs exactly 2 answer options")
        if self.template_id not in TEMPLATE_FILES:
            raise ValueError(f"unknown template id {self.template_id!r}")
        if not 1 <= len(self.images) <= 2:
            raise ValueError("queries attach 1 or 2 images")


@dataclass(frozen=True)
class VoteResult:
    repetitions: int
    tallies: dict[str, int]
    positive: str

    @property
    def confidence(self) -> float:
        return self.tallies.get(self.positive, 0) / self.repetitions


def extract_answer(text: str, options: tuple[str, str]) -> str | None:
    """The chosen option from a transcript: the explicit ``Answer:`` line
    wins, else a reply that is exactly one option, else the last option word
    mentioned."""
    matches = _ANSWER_RE.findall(text)
    for candidate in reversed(matches):
        for opt in options:
            if candidate.lower() == opt.lower():
                return opt
    stripped = text.strip().strip(".()\"'")
    for opt in options:
        if stripped.lower() == opt.lower():
            return opt
    last: tuple[int, str] | None = None
    for opt in options:
        for m in re.finditer(rf"\b{re.escape(opt)}\b", text, re.IGNORECASE):
            if last is None or m.start() > last[0]:
                last = (m.start(), opt)
    return last[1] if last else None


def extract_option_logscores(response: dict, options: tuple[str, str]) -> tuple[float, float] | None:
    """Log-scores for both options from the response's token alternatives.

    Scans the answer tokens for a position whose alternatives mention both
    options; multi-token option labels are matched on their leading token.
    Returns None when the endpoint exposed nothing usable.
    """
    try:
        content = response["choices"][0]["logprobs"]["content"]
    except (KeyError, IndexError, TypeError):
        return None
    if not content:
        return None

    def leading(token: str) -> str:
        return token.strip().lower()

    want = tuple(opt.lower() for opt in options)
    for position in content:
        alts = {leading(alt["token"]): float(alt["logprob"]) for alt in position.get("top_logprobs", [])}
        tok = leading(position.get("token", ""))
        if tok in want and tok not in alts:
            alts[tok] = float(position.get("logprob", 0.0))
        found = [alts.get(w) for w in want]
        if all(v is not None for v in found):
            return found[0], found[1]
    return None


class JudgeGateway:
    """Shared front end to a vision judge.

    Responses are cached by request content; full transcripts are persisted
    hash-addressed for later disagreement audits.
    """

    def __init__(
        self,
        client,
        cache_dir: str | Path | None = None,
        transcripts_dir: str | Path | None = None,
        vote_repetitions: int = 5,
    ):
        if cache_dir is not None:
            client = CachingClient(client, cache_dir, suffix=".json")
        self.client = client
        self.transcripts_dir = Path(transcripts_dir) if transcripts_dir else None
        if self.transcripts_dir:
            self.transcripts_dir.mkdir(parents=True, exist_ok=True)
        self.vote_repetitions = vote_repetitions

    # -- request construction -------------------------------------------------

    def _build_body(self, q: JudgeQuery, extra_user_text: str | None = None, salt: int | None = None) -> dict:
        template = load_template(TEMPLATE_FILES[q.template_id])
        filled = fill_template(template, q.slots)
        content = [text_content(filled)]
        for png in q.images:
            content.append(image_content(png))
        messages = [
            {"role": "system", "content": load_template("judge_system.txt")},
            {"role": "user", "content": content},
        ]
        if extra_user_text:
            messages.append({"role": "user", "content": [text_content(extra_user_text)]})
        body = {
            "messages": messages,
            "temperature": q.temperature,
            "top_p": q.top_p,
            "logprobs": True,
            "top_logprobs": 5,
        }
        if salt is not None:
            body["vote_index"] = salt  # distinct cache key per repetition
        return body

    def _persist_transcript(self, body: dict, response: dict) -> str:
        payload = json.dumps({"request": body, "response": response}, sort_keys=True)
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        if self.transcripts_dir:
            path = self.transcripts_dir / f"{digest}.json"
            if not path.is_file():
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_text(payload)
                tmp.replace(path)
        return digest

    # -- operations -----------------------------------------------------------

    def forced_choice(self, q: JudgeQuery) -> JudgeDecision:
        """One forced-choice decision with confidence.

        An unparseable answer triggers a single re-ask carrying a format
        reminder; a second failure raises ``JudgeFormatError``.
        """
        if q.temperature != 0.0:
            raise ValueError("forced choice uses deterministic decoding (temperature 0)")
        body = self._build_body(q)
        response = self.client.complete(body)
        label = extract_answer(response_text(response), q.options)
        if label is None:
            body = self._build_body(q, extra_user_text=FORMAT_REMINDER)
            response = self.client.complete(body)
            label = extract_answer(response_text(response), q.options)
            if label is None:
                raise JudgeFormatError(
                    f"judge answered outside {q.options} twice for {q.question_id or q.template_id}"
                )
        ref = self._persist_transcript(body, response)

        logscores = extract_option_logscores(response, q.options)
        if logscores is not None:
            conf_first = confidence(*logscores)
            conf = conf_first if label == q.options[0] else 1.0 - conf_first
        else:
            conf = 1.0  # hard label without scores: degenerate two-way softmax
        return JudgeDecision(
            question_id=q.question_id or q.template_id,
            label=label,
            confidence=conf,
            transcript_ref=ref,
        )

    def count_components(self, category: str, image_png: bytes) -> int:
        """Predicted instance count for one category, queried in isolation."""
        if not category:
            raise ValueError("category must be non-empty")
        q = JudgeQuery(
            template_id="count",
            slots={"CATEGORY": category},
            images=(image_png,),
            options=("Yes", "No"),  # unused; counting parses an integer
            question_id=f"count/{category}",
        )
        body = self._build_body(q)
        response = self.client.complete(body)
        count = self._parse_count(response)
        if count is None:
            body = self._build_body(q, extra_user_text=COUNT_FORMAT_REMINDER)
            response = self.client.complete(body)
            count = self._parse_count(response)
            if count is None:
                raise JudgeFormatError(f"no integer count for category {category!r} after re-ask")
        self._persist_transcript(body, response)
        return count

    @staticmethod
    def _parse_count(response: dict) -> int | None:
        text = response_text(response).strip()
        try:
            payload = json.loads(text)
            if isinstance(payload, dict) and isinstance(payload.get("count"), int):
                return payload["count"]
        except json.JSONDecodeError:
            pass
        m = _COUNT_RE.search(text)
        if m:
            return int(m.group(1))
        if re.fullmatch(r"-?\d+", text):
            return int(text)
        return None

    def self_consistency(self, q: JudgeQuery, repetitions: int | None = None) -> VoteResult:
        """Repeat a stochastic query and use the majority fraction as
        confidence. Any transport failure rejects the whole vote."""
        r = repetitions if repetitions is not None else self.vote_repetitions
        if r < 1:
            raise ValueError("need at least one repetition")
        stochastic = replace(q, temperature=VOTE_TEMPERATURE, top_p=VOTE_TOP_P)
        tallies = {opt: 0 for opt in q.options}
        for i in range(r):
            body = self._build_body(stochastic, salt=i)
            try:
                response = self.client.complete(body)
            except EndpointError:
                raise
            label = extract_answer(response_text(response), q.options)
            if label is None:
                raise JudgeFormatError(f"unparseable vote {i + 1}/{r}")
            tallies[label] += 1
            self._persist_transcript(body, response)
        return VoteResult(repetitions=r, tallies=tallies, positive=q.options[0])


class MockJudgeClient:
    """Offline judge stand-in with deterministic answers.

    Forced-choice questions get the positive option with symmetric
    log-scores shifted by ``positive_margin``; count questions return the
    count from ``counts`` (normalized-name lookup) or ``default_count``.
    Useful ``counts`` come from the evaluated asset's own part multiset,
    which simulates an error-free judge.
    """

    def __init__(
        self,
        counts: dict[str, int] | None = None,
        default_count: int = 1,
        positive_margin: float = 2.0,
        model: str = "mock-judge",
    ):
        self.counts = {_normalize(k): v for k, v in (counts or {}).items()}
        self.default_count = default_count
        self.positive_margin = positive_margin
        self.model = model
        self.calls = 0

    @classmethod
    def from_part_names(cls, part_names: list[str], **kwargs) -> "MockJudgeClient":
        tally: dict[str, int] = {}
        for name in part_names:
            key = _normalize(name)
            tally[key] = tally.get(key, 0) + 1
        return cls(counts=tally, **kwargs)

    def complete(self, body: dict) -> dict:
        from .client import MockChatClient, _request_text

        self.calls += 1
        text = _request_text(body)
        m = re.search(r'Target Category: "(.*?)"', text)
        if m:
            key = _normalize(m.group(1))
            count = self.counts.get(key, self.default_count)
            return MockChatClient.text_response(json.dumps({"count": count}))
        options = ("Attached", "Detached") if "Attached/Detached" in text else ("Yes", "No")
        positive = options[0]
        answer = f"Final Verdict:\n   - Answer: ({positive})\n   - Confidence Score: (90%)"
        return MockChatClient.text_response(
            answer, logscores={options[0]: 0.0, options[1]: -self.positive_margin}
        )


def _normalize(name: str) -> str:
    from .schedule import normalize_part_name

    return normalize_part_name(name)
