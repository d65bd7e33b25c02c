"""Chat-completion gateway with pluggable providers and record/replay transport.

Every LLM call in the pipeline goes through :class:`LLMGateway`, which makes
runs reproducible: a cassette recorded once replays byte-identically, and a
replay-mode gateway never touches the network.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from chipforge.errors import (
    BudgetExceeded,
    ProviderError,
    ReplayMiss,
    UnboundPlaceholder,
    UnknownTemplate,
)

logger = logging.getLogger(__name__)

ROLES = frozenset(
    {
        "parser",
        "desc-generator",
        "desc-evaluator",
        "dep-analyzer",
        "coder",
        "thinker",
        "testbench-gen",
        "dse-proposer",
        "layout-configurator",
    }
)

ENDPOINT_ENV = "CHIPFORGE_LLM_ENDPOINT"
KEY_ENV = "CHIPFORGE_LLM_KEY"

_LOCAL_MODEL_TAGS = ("llama", "gemma", "ollama", "mistral", "qwen", "local")


def default_temperature(model_id: str) -> float:
    """0.8 for the primary hosted model, 0.6 for local model families."""
    lowered = model_id.lower()
    if any(tag in lowered for tag in _LOCAL_MODEL_TAGS):
        return 0.6
    return 0.8


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate (4 chars/token, rounded up)."""
    return -(-len(text) // 4)


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class ChatRequest:
    role_name: str
    system_prompt: str
    user_prompt: str
    temperature: float
    model_id: str
    max_tokens: int

    def __post_init__(self) -> None:
        if self.role_name not in ROLES:
            raise ValueError(f"unregistered agent role: {self.role_name!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: Usage
    latency_ms: int
    transport: str  # live | replay | scripted


def request_fingerprint(
    role_name: str, system_prompt: str, user_prompt: str, model_id: str, sequence: int
) -> str:
    """Stable fingerprint; the per-role sequence index keeps repeated prompts distinct."""
    payload = json.dumps(
        [role_name, system_prompt, user_prompt, model_id, sequence],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class CassetteEntry:
    fingerprint: str
    role: str
    response: str


class ReplayCassette:
    """Ordered request/response store; one of record, replay, passthrough."""

    MODES = ("record", "replay", "passthrough")

    def __init__(self, mode: str = "record", entries: list[CassetteEntry] | None = None):
        if mode not in self.MODES:
            raise ValueError(f"unknown cassette mode: {mode!r}")
        self.mode = mode
        self.entries: list[CassetteEntry] = list(entries or [])
        self._index = {e.fingerprint: e.response for e in self.entries}

    @classmethod
    def load(cls, path: str | Path, mode: str = "replay") -> "ReplayCassette":
        records = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = [
            CassetteEntry(r["fingerprint"], r["role"], r["response"]) for r in records
        ]
        return cls(mode=mode, entries=entries)

    def save(self, path: str | Path) -> None:
        records = [
            {"fingerprint": e.fingerprint, "role": e.role, "response": e.response}
            for e in self.entries
        ]
        Path(path).write_text(
            json.dumps(records, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def lookup(self, fingerprint: str) -> str | None:
        return self._index.get(fingerprint)

    def append(self, entry: CassetteEntry) -> None:
        self.entries.append(entry)
        self._index[entry.fingerprint] = entry.response

    def __len__(self) -> int:
        return len(self.entries)


class Provider(Protocol):
    transport: str

    def complete(self, request: ChatRequest) -> str: ...


class ScriptedProvider:
    """Canned replies per role, consumed in order; used by tests and fixtures."""

    transport = "scripted"

    def __init__(
        self,
        replies: dict[str, list[str]] | None = None,
        fallback: Callable[[ChatRequest], str] | None = None,
    ):
        self._replies = {role: list(lines) for role, lines in (replies or {}).items()}
        self._fallback = fallback

    def complete(self, request: ChatRequest) -> str:
        queue = self._replies.get(request.role_name)
        if queue:
            return queue.pop(0)
        if self._fallback is not None:
            return self._fallback(request)
        raise ProviderError(f"script exhausted for role {request.role_name!r}")


class HttpProvider:
    """OpenAI-style chat endpoint; endpoint and key come from the environment."""

    transport = "live"

    def __init__(
        self, endpoint: str, api_key: str = "", timeout_s: float = 120.0
    ) -> None:
        if not endpoint:
            raise ProviderError(f"no provider endpoint; set {ENDPOINT_ENV}")
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout_s = timeout_s

    def complete(self, request: ChatRequest) -> str:
        body = {
            "model": request.model_id,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        req = urllib.request.Request(
            self.endpoint, data=json.dumps(body).encode("utf-8"), headers=headers
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
            return payload["choices"][0]["message"]["content"]
        except (urllib.error.URLError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"provider call failed: {exc}") from exc


class LLMGateway:
    """Uniform completion interface with budget, audit log, and replay."""

    def __init__(
        self,
        provider: Provider | None = None,
        cassette: ReplayCassette | None = None,
        token_budget: int | None = None,
        log_dir: str | Path | None = None,
        default_model: str = "gpt-4o",
        role_models: dict[str, str] | None = None,
        role_temperatures: dict[str, float] | None = None,
    ) -> None:
        self.provider = provider
        self.cassette = cassette
        self.token_budget = token_budget
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.default_model = default_model
        self.role_models = dict(role_models or {})
        self.role_temperatures = dict(role_temperatures or {})
        self._sequence: dict[str, int] = {}
        self._used_tokens = 0
        self._live_calls = 0
        self._lock = threading.Lock()
        self.request_log: list[tuple[ChatRequest, ChatResponse]] = []
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)

    @property
    def mode(self) -> str:
        return self.cassette.mode if self.cassette is not None else "passthrough"

    @property
    def used_tokens(self) -> int:
        return self._used_tokens

    @property
    def live_calls(self) -> int:
        """Number of live-transport completions; must stay 0 in replay mode."""
        return self._live_calls

    def model_for(self, role: str) -> str:
        return self.role_models.get(role, self.default_model)

    def temperature_for(self, role: str) -> float:
        if role in self.role_temperatures:
            return self.role_temperatures[role]
        return default_temperature(self.model_for(role))

    def request(
        self,
        role: str,
        system_prompt: str,
        user_prompt: str,
        max_tokens: int = 2048,
        temperature: float | None = None,
    ) -> ChatRequest:
        """Build a request with the role's configured model and temperature."""
        return ChatRequest(
            role_name=role,
            system_prompt=system_prompt,
            user_prompt=user_prompt,
            temperature=self.temperature_for(role) if temperature is None else temperature,
            model_id=self.model_for(role),
            max_tokens=max_tokens,
        )

    def complete(self, request: ChatRequest) -> ChatResponse:
        prompt_tokens = estimate_tokens(request.system_prompt) + estimate_tokens(
            request.user_prompt
        )
        with self._lock:
            if (
                self.token_budget is not None
                and self._used_tokens + prompt_tokens + request.max_tokens
                > self.token_budget
            ):
                raise BudgetExceeded(
                    f"request could exceed token budget ({self._used_tokens} used "
                    f"of {self.token_budget})"
                )
            seq = self._sequence.get(request.role_name, 0)
            self._sequence[request.role_name] = seq + 1
        fp = request_fingerprint(
            request.role_name,
            request.system_prompt,
            request.user_prompt,
            request.model_id,
            seq,
        )

        if self.mode == "replay":
            text = self.cassette.lookup(fp)
            if text is None:
                raise ReplayMiss(
                    f"no cassette entry for role={request.role_name} seq={seq} "
                    f"fingerprint={fp[:12]}..."
                )
            # completion tokens are capped at max_tokens so accounted usage can
            # never exceed the reservation made by the budget pre-check
            response = ChatResponse(
                text=text,
                usage=Usage(prompt_tokens, min(estimate_tokens(text), request.max_tokens)),
                latency_ms=0,
                transport="replay",
            )
        else:
            if self.provider is None:
                raise ProviderError("no provider configured and cassette not in replay mode")
            started = time.monotonic()
            text = self.provider.complete(request)
            latency_ms = int((time.monotonic() - started) * 1000)
            response = ChatResponse(
                text=text,
                usage=Usage(prompt_tokens, min(estimate_tokens(text), request.max_tokens)),
                latency_ms=latency_ms,
                transport=self.provider.transport,
            )
            if self.mode == "record":
                with self._lock:
                    self.cassette.append(CassetteEntry(fp, request.role_name, text))

        with self._lock:
            self._used_tokens += response.usage.total_tokens
            if response.transport == "live":
                self._live_calls += 1
            self.request_log.append((request, response))
        self._write_log(request, response, seq, fp)
        logger.debug(
            "complete role=%s seq=%d transport=%s tokens=%d",
            request.role_name,
            seq,
            response.transport,
            response.usage.total_tokens,
        )
        return response

    def _write_log(
        self, request: ChatRequest, response: ChatResponse, seq: int, fp: str
    ) -> None:
        if self.log_dir is None:
            return
        record = {
            "role": request.role_name,
            "sequence": seq,
            "fingerprint": fp,
            "model": request.model_id,
            "temperature": request.temperature,
            "transport": response.transport,
            "system_prompt": request.system_prompt,
            "user_prompt": request.user_prompt,
            "response": response.text,
        }
        line = json.dumps(record, ensure_ascii=False)
        with self._lock:
            with (self.log_dir / "gateway.jsonl").open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")


class TemplateRegistry:
    """Prompt templates as plain-text files with {{name}} placeholders."""

    def __init__(self, extra_dirs: list[str | Path] | None = None) -> None:
        self._dirs = [Path(d) for d in (extra_dirs or [])]
        self._dirs.append(Path(__file__).parent / "templates")
        self._cache: dict[str, str] = {}

    def template_text(self, name: str) -> str:
        if name in self._cache:
            return self._cache[name]
        for directory in self._dirs:
            candidate = directory / f"{name}.txt"
            if candidate.is_file():
                text = candidate.read_text(encoding="utf-8")
                self._cache[name] = text
                return text
        raise UnknownTemplate(f"no template named {name!r}")

    def render(self, name: str, bindings: dict[str, str]) -> str:
        text = self.template_text(name)
        missing = [
            ph for ph in dict.fromkeys(_PLACEHOLDER_RE.findall(text)) if ph not in bindings
        ]
        if missing:
            raise UnboundPlaceholder(
                f"template {name!r} has unbound placeholders: {', '.join(missing)}"
            )
        return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), text)


_default_registry: TemplateRegistry | None = None


def render_template(name: str, bindings: dict[str, str]) -> str:
    """Render a packaged template; see :class:`TemplateRegistry` for overlays."""
    global _default_registry
    if _default_registry is None:
        _default_registry = TemplateRegistry()
    return _default_registry.render(name, bindings)
