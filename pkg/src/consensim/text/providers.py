"""Sentence-generation and embedding providers.

Three families ship here:

* deterministic mocks for offline runs and tests — a sentence generator
  that answers the prompt templates from a synthetic vocabulary, plus two
  embedders (a per-text hash embedder and a compositional bag-of-words
  embedder whose geometry tracks word overlap);
* HTTP clients speaking a chat-completion-style JSON protocol and a flat
  vector embedding endpoint, configured through environment variables;
* transcript decorators that log every provider call to a JSON-lines file
  and replay providers that reproduce a recorded run without the network.

All providers are safe for concurrent calls; each mock instance derives its
randomness from its seed and an internal call counter, so a fixed call
sequence always yields the same outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Protocol

import numpy as np

from . import prompts

DEFAULT_EMBED_DIM = 512

ENV_LLM_API_KEY = "MEDIATOR_LLM_API_KEY"
ENV_LLM_ENDPOINT = "MEDIATOR_LLM_ENDPOINT"
ENV_LLM_MODEL = "MEDIATOR_LLM_MODEL"
ENV_EMBED_ENDPOINT = "MEDIATOR_EMBED_ENDPOINT"
ENV_EMBED_MODEL = "MEDIATOR_EMBED_MODEL"
ENV_EMBED_DIM = "MEDIATOR_EMBED_DIM"


class ProviderError(RuntimeError):
    """A provider failed, or kept misbehaving past the retry budget."""


@dataclass
class LlmRequest:
    system_message: str
    user_prompt: str
    temperature: float = 0.75
    max_retries: int = 3
    template: str = ""

    def __post_init__(self):
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError("temperature must be in [0, 2]")


class LlmProvider(Protocol):
    name: str
    backoff_base: float

    def complete(self, request: LlmRequest) -> str: ...


class EmbeddingProvider(Protocol):
    name: str
    dim: int

    def embed_text(self, text: str) -> np.ndarray: ...


@dataclass
class TextProviders:
    llm: LlmProvider
    embedder: EmbeddingProvider


def _sha_seed(*parts: str) -> int:
    digest = hashlib.sha256("\x1f".join(parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9']+", text.lower())


# --- mock semantic universe ------------------------------------------------

# A fixed pool of plain words.  Each topic carves out a deterministic
# sub-vocabulary, so sentences about the same topic overlap in words and the
# bag-of-words embedder places them near each other.
WORD_POOL = (
    "action balance barrier belief benefit boundary bridge budget campaign care "
    "cause challenge change charter citizen city claim climate coast committee "
    "common community compromise concern consensus consent control cooperation cost council "
    "country culture cycle debate decision demand dialogue direction discussion district "
    "duty economy education effort energy equity ethics evidence exchange expansion "
    "fairness faith farm finance forest forum fuel future garden goal "
    "governance grant ground growth habit harbor health heritage history home "
    "hope impact incentive industry initiative innovation interest investment island justice "
    "knowledge labor land law leadership legacy liberty limit market measure "
    "mediation meeting member mission moment motion movement nature need neighborhood "
    "network norm ocean opinion opportunity order outcome oversight ownership participation "
    "partnership peace plan planet pledge policy power practice principle priority "
    "process program progress promise proposal prosperity protection purpose quality reason "
    "reform region register regulation repair research resilience resource respect responsibility "
    "reward right risk river road safety scale school science season "
    "sector security service shelter society solution stability standard strategy street "
    "structure support system target tax teamwork technology tradition training transit "
    "transparency transport trust union value vision vote water welfare wisdom"
).split()

TOPIC_VOCAB_SIZE = 40
SENTENCE_TOPIC_WORDS = 6
SENTENCE_FREE_WORDS = 2
RANDOM_SENTENCE_WORDS = 10


def topic_vocabulary(topic: str) -> list[str]:
    """Deterministic sub-vocabulary for a topic."""
    rng = np.random.default_rng(_sha_seed("topic-vocab", topic.lower()))
    idx = rng.choice(len(WORD_POOL), size=TOPIC_VOCAB_SIZE, replace=False)
    return [WORD_POOL[i] for i in sorted(idx)]


def _as_sentence(words: list[str]) -> str:
    return " ".join(words).capitalize() + "."


@dataclass
class MockLlm:
    """Deterministic stand-in for a chat-completion model.

    Recognises the prompt templates by their wording and builds replies from
    the topic vocabulary: topical sentences always contain the topic's own
    words, aggregation candidates mix the words of the two input sentences
    at varying ratios, and random sentences draw from the whole pool.
    """

    seed: int = 0
    name: str = "mock-llm"
    backoff_base: float = 0.0
    _counter: int = field(default=0, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _rng(self) -> np.random.Generator:
        with self._lock:
            call_id = self._counter
            self._counter += 1
        return np.random.default_rng(_sha_seed("mock-llm", str(self.seed), str(call_id)))

    def complete(self, request: LlmRequest) -> str:
        prompt = request.user_prompt
        if "resembling this sentence:" in prompt:
            original = prompt.split("resembling this sentence:", 1)[1].strip()
            return self._resembling(original)
        if "different sentences that are well structured about how to deal with" in prompt:
            count = int(re.search(r"Give me (\d+) different", prompt).group(1))
            topic = prompt.split("how to deal with ", 1)[1].split(" with at most", 1)[0]
            return self._ideal_list(topic, count)
        if "completely random" in prompt:
            rng = self._rng()
            words = [WORD_POOL[i] for i in rng.choice(len(WORD_POOL), RANDOM_SENTENCE_WORDS)]
            return _as_sentence(list(words))
        for marker in (
            "aggregate the following two sentences",
            "blend the following two sentences",
            "combine these two sentences",
        ):
            if marker in prompt:
                count = int(re.search(r"(?:Generate|Create) (\d+) ", prompt).group(1))
                lines = [ln for ln in prompt.splitlines() if ln.strip()]
                s1, s2 = lines[-2], lines[-1]
                return self._aggregates(s1, s2, count)
        raise ProviderError(f"mock LLM cannot answer prompt: {prompt[:60]!r}")

    def _ideal_list(self, topic: str, count: int) -> str:
        rng = self._rng()
        vocab = topic_vocabulary(topic)
        core = _tokens(topic)[:3]
        lines = []
        for k in range(count):
            topical = [vocab[i] for i in rng.choice(len(vocab), SENTENCE_TOPIC_WORDS, replace=False)]
            free = [WORD_POOL[i] for i in rng.choice(len(WORD_POOL), SENTENCE_FREE_WORDS)]
            words = core + topical + free
            rng.shuffle(words)
            lines.append(f"{k + 1}) {_as_sentence(words)}")
        return "\n".join(lines)

    def _resembling(self, sentence: str) -> str:
        rng = self._rng()
        words = _tokens(sentence)
        if len(words) > 1:
            drop = int(rng.integers(len(words)))
            words = words[:drop] + words[drop + 1:]
        words.append(WORD_POOL[int(rng.integers(len(WORD_POOL)))])
        return _as_sentence(words)

    def _aggregates(self, s1: str, s2: str, count: int) -> str:
        rng = self._rng()
        t1, t2 = _tokens(s1), _tokens(s2)
        lines = []
        for k in range(count):
            if count == 1:
                ratio = rng.uniform(0.15, 0.85)
            else:
                ratio = (k + 1) / (count + 1)
            take1 = max(1, round(ratio * len(t1)))
            take2 = max(1, round((1.0 - ratio) * len(t2)))
            part1 = [t1[i] for i in sorted(rng.choice(len(t1), min(take1, len(t1)), replace=False))]
            part2 = [t2[i] for i in sorted(rng.choice(len(t2), min(take2, len(t2)), replace=False))]
            merged: list[str] = []
            for w in part1 + part2:
                if w not in merged:
                    merged.append(w)
            lines.append(f"{k + 1}) {_as_sentence(merged)}")
        return "\n".join(lines)


@lru_cache(maxsize=65536)
def _word_vector(seed: int, dim: int, word: str) -> np.ndarray:
    rng = np.random.default_rng(_sha_seed("word-vec", str(seed), str(dim), word))
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


@dataclass
class HashEmbedder:
    """Stable hash-seeded unit-norm vector per text (no compositionality)."""

    dim: int = DEFAULT_EMBED_DIM
    seed: int = 0
    name: str = "hash-embed"

    def embed_text(self, text: str) -> np.ndarray:
        rng = np.random.default_rng(_sha_seed("hash-embed", str(self.seed), str(self.dim), text))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)


@dataclass
class BagOfWordsEmbedder:
    """Synthetic semantic embedding: the unit-normalised sum of per-word hash
    vectors, so texts sharing words land near each other."""

    dim: int = DEFAULT_EMBED_DIM
    seed: int = 0
    name: str = "bow-embed"

    def embed_text(self, text: str) -> np.ndarray:
        words = _tokens(text)
        if not words:
            raise ProviderError(f"cannot embed text without word characters: {text!r}")
        acc = np.zeros(self.dim)
        for w in words:
            acc += _word_vector(self.seed, self.dim, w)
        norm = np.linalg.norm(acc)
        if norm == 0.0:
            raise ProviderError("bag-of-words vector cancelled to zero")
        return acc / norm


@dataclass
class ScriptedLlm:
    """Test helper: returns queued replies in order, then fails."""

    replies: list[str]
    name: str = "scripted-llm"
    backoff_base: float = 0.0
    calls: list[LlmRequest] = field(default_factory=list)

    def complete(self, request: LlmRequest) -> str:
        self.calls.append(request)
        if not self.replies:
            raise ProviderError("scripted LLM ran out of replies")
        return self.replies.pop(0)


# --- HTTP providers ---------------------------------------------------------

RETRY_BACKOFF_BASE = 0.5
DEFAULT_MAX_INFLIGHT = 4


def _backoff_sleep(base: float, attempt: int) -> None:
    if base > 0:
        time.sleep(base * (2 ** attempt))


@dataclass
class HttpLlm:
    """Chat-completion-style JSON-over-HTTPS client.

    Endpoint and model come from ``MEDIATOR_LLM_ENDPOINT`` /
    ``MEDIATOR_LLM_MODEL`` (key from ``MEDIATOR_LLM_API_KEY``); the payload
    is a messages array of role/content records and the reply is read from
    ``choices[0].message.content``.
    """

    endpoint: str
    model: str
    api_key: Optional[str] = None
    timeout: float = 60.0
    max_inflight: int = DEFAULT_MAX_INFLIGHT
    name: str = "http-llm"
    backoff_base: float = RETRY_BACKOFF_BASE

    def __post_init__(self):
        self._sem = threading.Semaphore(self.max_inflight)

    @classmethod
    def from_env(cls) -> "HttpLlm":
        endpoint = os.environ.get(ENV_LLM_ENDPOINT)
        if not endpoint:
            raise ProviderError(f"{ENV_LLM_ENDPOINT} is not set")
        return cls(
            endpoint=endpoint,
            model=os.environ.get(ENV_LLM_MODEL, "gpt-3.5-turbo"),
            api_key=os.environ.get(ENV_LLM_API_KEY),
        )

    def complete(self, request: LlmRequest) -> str:
        messages = []
        if request.system_message:
            messages.append({"role": "system", "content": request.system_message})
        messages.append({"role": "user", "content": request.user_prompt})
        payload = {
            "model": self.model,
            "temperature": request.temperature,
            "messages": messages,
        }
        body = _post_with_retries(
            self.endpoint, payload, self.api_key, self.timeout,
            request.max_retries, self.backoff_base, self._sem,
        )
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion response: {exc}") from exc


@dataclass
class HttpEmbedder:
    """Embedding endpoint client returning a flat real vector per text."""

    endpoint: str
    model: str
    dim: int = DEFAULT_EMBED_DIM
    api_key: Optional[str] = None
    timeout: float = 60.0
    max_retries: int = 3
    max_inflight: int = DEFAULT_MAX_INFLIGHT
    name: str = "http-embed"
    backoff_base: float = RETRY_BACKOFF_BASE

    def __post_init__(self):
        self._sem = threading.Semaphore(self.max_inflight)

    @classmethod
    def from_env(cls) -> "HttpEmbedder":
        endpoint = os.environ.get(ENV_EMBED_ENDPOINT)
        if not endpoint:
            raise ProviderError(f"{ENV_EMBED_ENDPOINT} is not set")
        return cls(
            endpoint=endpoint,
            model=os.environ.get(ENV_EMBED_MODEL, "sentence-encoder"),
            dim=int(os.environ.get(ENV_EMBED_DIM, DEFAULT_EMBED_DIM)),
            api_key=os.environ.get(ENV_LLM_API_KEY),
        )

    def embed_text(self, text: str) -> np.ndarray:
        payload = {"model": self.model, "input": text}
        body = _post_with_retries(
            self.endpoint, payload, self.api_key, self.timeout,
            self.max_retries, self.backoff_base, self._sem,
        )
        if isinstance(body, list):
            vec = body
        elif isinstance(body, dict) and "embedding" in body:
            vec = body["embedding"]
        else:
            try:
                vec = body["data"][0]["embedding"]
            except (KeyError, IndexError, TypeError) as exc:
                raise ProviderError(f"malformed embedding response: {exc}") from exc
        arr = np.asarray(vec, dtype=float)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            raise ProviderError(
                f"embedding dimension mismatch: got {arr.shape}, expected ({self.dim},)"
            )
        return arr


def _post_with_retries(endpoint, payload, api_key, timeout, max_retries, backoff_base, sem):
    import requests

    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last_error = None
    for attempt in range(max_retries + 1):
        if attempt > 0:
            _backoff_sleep(backoff_base, attempt - 1)
        try:
            with sem:
                resp = requests.post(endpoint, json=payload, headers=headers, timeout=timeout)
            if resp.status_code >= 500:
                last_error = f"server error {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise ProviderError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
            return resp.json()
        except ProviderError:
            raise
        except Exception as exc:  # network failures, JSON decode errors
            last_error = repr(exc)
    raise ProviderError(f"provider unreachable after {max_retries + 1} attempts: {last_error}")


# --- transcript logging and replay ------------------------------------------

class TranscriptWriter:
    """Appends one JSON record per provider call to a JSON-lines file."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._fh = open(path, "w", encoding="utf-8")

    def write(self, record: dict) -> None:
        line = json.dumps(record, separators=(",", ":"))
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class TranscriptLoggingLlm:
    inner: LlmProvider
    writer: TranscriptWriter
    name: str = "transcript-llm"

    @property
    def backoff_base(self) -> float:
        return self.inner.backoff_base

    def complete(self, request: LlmRequest) -> str:
        start = time.monotonic()
        reply = self.inner.complete(request)
        self.writer.write({
            "kind": "llm",
            "template": request.template,
            "system": request.system_message,
            "prompt": request.user_prompt,
            "temperature": request.temperature,
            "reply": reply,
            "latency_ms": (time.monotonic() - start) * 1000.0,
        })
        return reply


@dataclass
class TranscriptLoggingEmbedder:
    inner: EmbeddingProvider
    writer: TranscriptWriter
    name: str = "transcript-embed"

    @property
    def dim(self) -> int:
        return self.inner.dim

    def embed_text(self, text: str) -> np.ndarray:
        start = time.monotonic()
        vec = self.inner.embed_text(text)
        self.writer.write({
            "kind": "embed",
            "text": text,
            "vector": [float(v) for v in vec],
            "latency_ms": (time.monotonic() - start) * 1000.0,
        })
        return vec


def read_transcript(path) -> tuple[Optional[dict], list[dict]]:
    """Load a transcript file; returns (header record or None, call records)."""
    header = None
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("kind") == "header":
                header = rec
            else:
                records.append(rec)
    return header, records


class ReplayLlm:
    """Serves recorded LLM replies in order, verifying each prompt matches."""

    name = "replay-llm"
    backoff_base = 0.0

    def __init__(self, records: list[dict]):
        self._queue = [r for r in records if r.get("kind") == "llm"]
        self._pos = 0
        self._lock = threading.Lock()

    def complete(self, request: LlmRequest) -> str:
        with self._lock:
            if self._pos >= len(self._queue):
                raise ProviderError("transcript exhausted: more LLM calls than recorded")
            rec = self._queue[self._pos]
            self._pos += 1
        if rec["prompt"] != request.user_prompt or rec["system"] != request.system_message:
            raise ProviderError(
                f"transcript divergence at LLM call {self._pos}: prompt does not match"
            )
        return rec["reply"]


class ReplayEmbedder:
    """Serves recorded embedding vectors in order, verifying each text."""

    name = "replay-embed"

    def __init__(self, records: list[dict], dim: int):
        self.dim = dim
        self._queue = [r for r in records if r.get("kind") == "embed"]
        self._pos = 0
        self._lock = threading.Lock()

    def embed_text(self, text: str) -> np.ndarray:
        with self._lock:
            if self._pos >= len(self._queue):
                raise ProviderError("transcript exhausted: more embed calls than recorded")
            rec = self._queue[self._pos]
            self._pos += 1
        if rec["text"] != text:
            raise ProviderError(
                f"transcript divergence at embed call {self._pos}: text does not match"
            )
        return np.asarray(rec["vector"], dtype=float)


class CachingEmbedder:
    """Per-run cache keyed by (provider name, text); identical keys always map
    to identical vectors, so last-write-wins races are harmless."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self.name = f"cached-{inner.name}"
        self._cache: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.inner.dim

    def embed_text(self, text: str) -> np.ndarray:
        key = (self.inner.name, text)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        vec = self.inner.embed_text(text)
        with self._lock:
            self._cache[key] = vec
        return vec
