"""Prompt-based automatic coding of utterances via a chat-completion endpoint.

The prompt embeds the codebook as a text table, up to five preceding
messages from the same group stream, and the message to code, and asks for
the bare code token back. Transports are pluggable: an HTTP client for real
endpoints and scriptable in-memory mocks for tests. Responses are cached on
disk keyed by a content hash of (prompt, model, temperature).
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import requests

from .corpus import BUILTIN_CODEBOOK, LEVEL_DISPLAY, Code, CodebookEntry, Utterance
from .errors import CredentialError, EmptyMessage, TransportError, Unparseable

ROLE_INSTRUCTION = (
    "You are now a text coder in a learning sciences study. Based on the given "
    "coding framework, the current message, and the context messages, you need "
    "to assign a code to the current message."
)

OUTPUT_INSTRUCTION = "Please output the code only (e.g., W1, S2, C)."

#: Multi-character tokens are matched as standalone words; the bare "I" code
#: is only accepted as an entire response (see parse_code).
_TOKEN_RE = re.compile(r"(?<![A-Za-z0-9])(O1|O2|W1|W2|W3|S1|S2|S3|C1)(?![A-Za-z0-9])")


def render_codebook(codebook: Iterable[CodebookEntry] = BUILTIN_CODEBOOK, shot_mode: str = "zero_shot") -> str:
    """Render the codebook as a pipe-separated text table.

    Few-shot rendering appends the example column; zero-shot omits it
    entirely (no Example header anywhere).
    """
    if shot_mode not in ("zero_shot", "few_shot"):
        raise ValueError(f"shot_mode must be 'zero_shot' or 'few_shot', got {shot_mode!r}")
    header = ["Interaction Level", "CPS Behavior", "Code", "Description"]
    if shot_mode == "few_shot":
        header.append("Example")
    lines = [" | ".join(header)]
    for entry in codebook:
        row = [LEVEL_DISPLAY[entry.level], entry.behavior_name, entry.code.value, entry.description]
        if shot_mode == "few_shot":
            row.append(entry.example)
        lines.append(" | ".join(row))
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptSpec:
    codebook_rendering: str
    context: tuple[str, ...]
    current_message: str
    shot_mode: str

    def __post_init__(self):
        if len(self.context) > 5:
            raise ValueError(f"context window holds at most 5 messages, got {len(self.context)}")
        if self.shot_mode not in ("zero_shot", "few_shot"):
            raise ValueError(f"shot_mode must be 'zero_shot' or 'few_shot', got {self.shot_mode!r}")


def build_prompt_parts(spec: PromptSpec) -> tuple[str, str]:
    """(system, user) message pair; their concatenation is build_prompt()."""
    if not spec.current_message.strip():
        raise EmptyMessage("current message is empty")
    if spec.context:
        context_block = "\n".join(f"- {text}" for text in spec.context)
    else:
        context_block = "(no preceding messages)"
    user = (
        "Coding framework:\n"
        f"{spec.codebook_rendering}\n\n"
        "Context:\n"
        f"{context_block}\n\n"
        "Current message:\n"
        f"{spec.current_message}\n\n"
        "Output format:\n"
        f"{OUTPUT_INSTRUCTION}"
    )
    return ROLE_INSTRUCTION, user


def build_prompt(spec: PromptSpec) -> str:
    """Full prompt text: role instruction, codebook, context, message, format."""
    system, user = build_prompt_parts(spec)
    return f"{system}\n\n{user}"


def parse_code(response_text: str) -> Code:
    """Extract the first standalone code token from a model response.

    Multi-character tokens win anywhere in the text; the single-letter "I"
    code is ambiguous with the English pronoun and is only accepted when the
    trimmed response is exactly "I".
    """
    match = _TOKEN_RE.search(response_text)
    if match:
        return Code(match.group(1))
    if response_text.strip() == "I":
        return Code.I
    raise Unparseable(response_text)


@dataclass(frozen=True)
class CoderConfig:
    endpoint_url: str = ""
    model_name: str = "generic-chat-model"
    api_key_env_var: str = "CODER_API_KEY"
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 60.0
    max_in_flight: int = 4
    cache_dir: Optional[str] = None
    context_window: int = 5

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_in_flight < 1:
            raise ValueError(f"max_in_flight must be >= 1, got {self.max_in_flight}")
        if self.max_retries < 1:
            raise ValueError(f"max_retries must be >= 1, got {self.max_retries}")


class HttpTransport:
    """Chat-completion client (system + user messages in, text out)."""

    def __init__(self, config: CoderConfig):
        self.config = config
        key = os.environ.get(config.api_key_env_var)
        if not key:
            raise CredentialError(
                f"environment variable {config.api_key_env_var!r} is unset; "
                "the API key is never read from config files"
            )
        self._key = key

    def complete(self, system: str, user: str, utterance: Optional[Utterance] = None) -> str:
        body = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
        }
        resp = requests.post(
            self.config.endpoint_url,
            json=body,
            headers={"Authorization": f"Bearer {self._key}"},
            timeout=self.config.timeout,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


class MockTransport:
    """Deterministic transport for tests: a fixed reply or a per-utterance script."""

    def __init__(self, script):
        # script: str, or callable(utterance) -> str
        self._script = script
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, system: str, user: str, utterance: Optional[Utterance] = None) -> str:
        with self._lock:
            self.calls += 1
        if callable(self._script):
            return self._script(utterance)
        return self._script


class ResponseCache:
    """One file per key under cache_dir; body is the raw response text."""

    def __init__(self, cache_dir: str | Path):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def key(prompt: str, model_name: str, temperature: float) -> str:
        payload = f"{model_name}\x1f{temperature!r}\x1f{prompt}".encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def get(self, key: str) -> Optional[str]:
        with self._lock:
            path = self.dir / key
            if path.exists():
                return path.read_text(encoding="utf-8")
            return None

    def put(self, key: str, response: str) -> None:
        with self._lock:
            tmp = self.dir / f".{key}.tmp"
            tmp.write_text(response, encoding="utf-8")
            tmp.replace(self.dir / key)


@dataclass
class CodingReport:
    total: int = 0
    coded: int = 0
    failed: int = 0
    failures: list = field(default_factory=list)  # (utterance_id, reason)
    cache_hits: int = 0
    transport_calls: int = 0
    model_name: str = ""
    shot_mode: str = ""

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "coded": self.coded,
            "failed": self.failed,
            "failures": [{"utterance_id": uid, "reason": reason} for uid, reason in self.failures],
            "cache_hits": self.cache_hits,
            "transport_calls": self.transport_calls,
            "model_name": self.model_name,
            "shot_mode": self.shot_mode,
        }


def _context_for(utterance: Utterance, group_stream: Sequence[Utterance], window: int) -> tuple[str, ...]:
    """Up to ``window`` texts preceding the utterance in its own group stream."""
    position = next(
        i for i, u in enumerate(group_stream) if u.utterance_id == utterance.utterance_id
    )
    start = max(0, position - window)
    return tuple(u.text for u in group_stream[start:position])


def code_corpus(
    utterances: Sequence[Utterance],
    config: CoderConfig,
    shot_mode: str = "zero_shot",
    transport=None,
    codebook: Iterable[CodebookEntry] = BUILTIN_CODEBOOK,
) -> tuple[list[Utterance], CodingReport]:
    """Fill code_pred on every utterance, or record it in the failure list.

    Requests run with at most ``config.max_in_flight`` in flight and results
    join in input order, so outputs never depend on scheduling. A warm cache
    answers without touching the transport. Per-utterance failures
    (unparseable responses, transport errors after retries) never abort the
    run.
    """
    if transport is None:
        transport = HttpTransport(config)
    rendering = render_codebook(codebook, shot_mode)
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None

    streams: dict = {}
    for utt in utterances:
        streams.setdefault(utt.group_id, []).append(utt)
    for stream in streams.values():
        stream.sort(key=lambda u: u.seq)

    def work(utt: Utterance):
        context = _context_for(utt, streams[utt.group_id], config.context_window)
        spec = PromptSpec(rendering, context, utt.text, shot_mode)
        try:
            system, user = build_prompt_parts(spec)
        except EmptyMessage:
            return None, "empty message", False, 0
        prompt = f"{system}\n\n{user}"
        key = ResponseCache.key(prompt, config.model_name, config.temperature)

        response = cache.get(key) if cache else None
        cache_hit = response is not None
        calls = 0
        if response is None:
            last_error = ""
            for attempt in range(1, config.max_retries + 1):
                calls += 1
                try:
                    response = transport.complete(system, user, utt)
                    break
                except Exception as exc:  # transport faults retry, then report
                    last_error = str(exc)
                    if attempt < config.max_retries:
                        time.sleep(0.0)
            if response is None:
                err = TransportError(utt.utterance_id, config.max_retries, last_error)
                return None, str(err), False, calls
            if cache:
                cache.put(key, response)
        try:
            code = parse_code(response)
        except Unparseable:
            return None, f"unparseable response {response!r}", cache_hit, calls
        return code, None, cache_hit, calls

    if config.max_in_flight == 1 or len(utterances) <= 1:
        outcomes = [work(u) for u in utterances]
    else:
        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            outcomes = list(pool.map(work, utterances))

    report = CodingReport(total=len(utterances), model_name=config.model_name, shot_mode=shot_mode)
    coded: list[Utterance] = []
    for utt, (code, reason, cache_hit, calls) in zip(utterances, outcomes):
        report.cache_hits += int(cache_hit)
        report.transport_calls += calls
        if code is None:
            report.failed += 1
            report.failures.append((utt.utterance_id, reason))
            # never leave a stale prediction on a failed utterance
            coded.append(replace(utt, code_pred=None))
        else:
            report.coded += 1
            coded.append(utt.with_pred(code))
    return coded, report
