"""Chat-completions endpoint clients with disk caching, retries, and an
offline deterministic mock.

Requests are plain dicts in the common chat-completions shape; images travel
as inline base-64 data URLs. The cache key is the SHA-256 of the canonical
request body, so identical requests never hit the network twice.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import EndpointError

DEFAULT_CREDENTIAL_ENV = "ASSEMBLYTRACE_API_KEY"


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "http://localhost:8000/v1"
    model: str = "gpt-4o"
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout: float = 60.0
    max_retries: int = 2
    cache_dir: str | None = None
    max_in_flight: int = 4
    requests_per_second: float | None = None

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def canonical_request_bytes(body: dict) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def request_hash(body: dict) -> str:
    return hashlib.sha256(canonical_request_bytes(body)).hexdigest()


def image_content(png_bytes: bytes) -> dict:
    b64 = base64.b64encode(png_bytes).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}


def text_content(text: str) -> dict:
    return {"type": "text", "text": text}


def response_text(response: dict) -> str:
    """Text of the first choice; empty string when absent."""
    try:
        content = response["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        return ""
    if isinstance(content, list):  # multi-part content
        content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
    return content or ""


class _TokenBucket:
    def __init__(self, rate: float, capacity: float | None = None):
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self.tokens = self.capacity
        self.stamp = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.stamp) * self.rate)
                self.stamp = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


class HttpChatClient:
    """Synchronous chat-completions client over HTTP with bounded in-flight
    requests, optional rate limiting, and exponential-backoff retries."""

    def __init__(self, config: EndpointConfig, sleep=time.sleep):
        self.config = config
        self._sleep = sleep
        self._semaphore = threading.Semaphore(config.max_in_flight)
        self._bucket = (
            _TokenBucket(config.requests_per_second)
            if config.requests_per_second
            else None
        )

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.credential_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, body: dict) -> dict:
        import requests

        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = dict(body)
        payload.setdefault("model", self.config.model)
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            with self._semaphore:
                try:
                    resp = requests.post(
                        url,
                        headers=self._headers(),
                        json=payload,
                        timeout=self.config.timeout,
                    )
                    if resp.status_code >= 500:
                        raise EndpointError(f"server error {resp.status_code}")
                    if resp.status_code != 200:
                        raise EndpointError(
                            f"endpoint returned {resp.status_code}: {resp.text[:500]}"
                        )
                    return resp.json()
                except EndpointError as exc:
                    last_error = exc
                except Exception as exc:  # transport errors
                    last_error = EndpointError(f"transport failure: {exc}")
            if attempt < self.config.max_retries:
                self._sleep(min(2.0 ** attempt, 8.0))
        raise EndpointError(f"giving up after {self.config.max_retries + 1} attempts: {last_error}")


class MockChatClient:
    """Deterministic offline stand-in for the endpoint.

    Behavior, in priority order: scripted responses (consumed FIFO), then a
    caller-supplied rule, then canned text derived from the request template
    (goal prompts, step rationales) keyed by the request hash.
    """

    def __init__(self, script: list | None = None, rule=None, model: str = "mock"):
        self.script = list(script or [])
        self.rule = rule
        self.model = model
        self.calls: list[dict] = []

    @staticmethod
    def text_response(text: str, logscores: dict[str, float] | None = None) -> dict:
        """Build a chat-completions-shaped response carrying ``text``.

        ``logscores`` maps answer labels to log-scores, surfaced the way the
        live endpoint surfaces answer-token alternatives.
        """
        message: dict = {"role": "assistant", "content": text}
        choice: dict = {"message": message, "finish_reason": "stop"}
        if logscores:
            top = [{"token": tok, "logprob": lp} for tok, lp in logscores.items()]
            choice["logprobs"] = {
                "content": [{"token": t["token"], "logprob": t["logprob"], "top_logprobs": top} for t in top[:1]]
            }
        return {"choices": [choice]}

    def complete(self, body: dict) -> dict:
        self.calls.append(body)
        if self.script:
            item = self.script.pop(0)
            return item if isinstance(item, dict) else self.text_response(str(item))
        if self.rule is not None:
            out = self.rule(body)
            if out is not None:
                return out if isinstance(out, dict) else self.text_response(str(out))
        return self.text_response(self._canned(body))

    def _canned(self, body: dict) -> str:
        text = _request_text(body)
        if "Write a highly specific goal prompt" in text:
            parts = _extract_block(text, "final components of the finished 3D object:")
            counts = _part_counts(parts)
            if not counts:
                return "Build an object with several parts."
            listing = _counted_listing(counts, first_adjective="sturdy")
            names = list(counts)
            out = f"Build an object with {listing}"
            if len(names) >= 2:
                out += f", with the {names[1]} attached to the {names[0]}"
            if len(names) >= 3:
                out += f" and the {names[2]} above the {names[0]}"
            return out + "."
        if "Generate a concise description for Step" in text:
            m = re.search(r"Step (\d+) of (\d+)", text)
            n, total = (int(m.group(1)), int(m.group(2))) if m else (1, 1)
            new_parts = _dedup_names(_extract_block(text, "New parts added in this step:"))
            listing = _join_names(new_parts) if new_parts else "the next part"
            word = transition_word(n, total)
            opening = f"{word}, attach" if word else "Attach"
            anchor = "the existing structure" if n > 1 else "the working surface"
            return f"{opening} {listing} securely onto {anchor} in the intended position."
        return f"mock response {request_hash(body)[:12]}"


def transition_word(n: int, total: int) -> str | None:
    """Transition word by position: none for a single step, then
    First / Next / Then / Finally."""
    if total <= 1:
        return None
    if n >= total:
        return "Finally"
    if n == 1:
        return "First"
    if n == 2:
        return "Next"
    return "Then"


def _request_text(body: dict) -> str:
    chunks: list[str] = []
    for message in body.get("messages", []):
        content = message.get("content", "")
        if isinstance(content, str):
            chunks.append(content)
        elif isinstance(content, list):
            for part in content:
                if isinstance(part, dict) and part.get("type") == "text":
                    chunks.append(part.get("text", ""))
    return "\n".join(chunks)


def _extract_block(text: str, heading: str) -> list[str]:
    """Lines of the indented/bulleted block that follows ``heading``."""
    lines = text.splitlines()
    out: list[str] = []
    grabbing = False
    for line in lines:
        if heading in line:
            grabbing = True
            continue
        if grabbing:
            stripped = line.strip()
            if not stripped:
                if out:
                    break
                continue
            if stripped.endswith(":"):
                break
            out.append(stripped.lstrip("-• ").strip())
    return out


def _dedup_names(raw: list[str]) -> list[str]:
    seen: list[str] = []
    for item in raw:
        name = re.sub(r"\(.*?\)", "", item).strip().rstrip(",")
        name = re.sub(r"^\d+\s*x\s*", "", name)
        if name and name.lower() not in (s.lower() for s in seen):
            seen.append(name)
    return seen


def _join_names(names: list[str]) -> str:
    if len(names) == 1:
        return f"the {names[0]}"
    return "the " + ", the ".join(names[:-1]) + f" and the {names[-1]}"


_NUMBER_WORDS = (
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
)


def _part_counts(raw: list[str]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for item in raw:
        name = re.sub(r"\(.*?\)", "", item).strip().rstrip(",")
        name = re.sub(r"^\d+\s*x\s*", "", name).strip()
        if name:
            counts[name] = counts.get(name, 0) + 1
    return counts


def _counted_listing(counts: dict[str, int], first_adjective: str | None = None) -> str:
    """Turn part counts into e.g. "the sturdy base, four legs and the seat"."""
    phrases = []
    for position, (name, count) in enumerate(counts.items()):
        adjective = f"{first_adjective} " if first_adjective and position == 0 else ""
        if count == 1:
            phrases.append(f"the {adjective}{name}")
        else:
            word = _NUMBER_WORDS[count] if count < len(_NUMBER_WORDS) else str(count)
            plural = name if name.endswith("s") else name + "s"
            phrases.append(f"{word} {adjective}{plural}")
    if not phrases:
        return "several parts"
    if len(phrases) == 1:
        return phrases[0]
    return ", ".join(phrases[:-1]) + f" and {phrases[-1]}"


class CachingClient:
    """Wrap any client with a content-addressed disk cache.

    Entries are written atomically (temp file + rename); the key is the hash
    of the canonical request bytes, so any byte difference is a miss.
    """

    def __init__(self, inner, cache_dir: str | Path, suffix: str = ".resp"):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.suffix = suffix
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def cache_path(self, body: dict) -> Path:
        return self.cache_dir / f"{request_hash(body)}{self.suffix}"

    def complete(self, body: dict) -> dict:
        path = self.cache_path(body)
        if path.is_file():
            with self._lock:
                self.hits += 1
            return json.loads(path.read_text())
        response = self.inner.complete(body)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(response, sort_keys=True))
        tmp.replace(path)
        with self._lock:
            self.misses += 1
        return response
