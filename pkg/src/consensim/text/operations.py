"""Sentence-level operations built on the providers and prompt templates."""

from __future__ import annotations

import logging

from ..spaces import EmbedVec
from . import prompts
from .providers import EmbeddingProvider, LlmProvider, LlmRequest, ProviderError, _backoff_sleep

log = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 3


def _request(option: str, llm: LlmProvider, max_retries: int = DEFAULT_MAX_RETRIES, **fields) -> str:
    message, prompt = prompts.TEMPLATES[option].render(**fields)
    return llm.complete(LlmRequest(
        system_message=message,
        user_prompt=prompt,
        max_retries=max_retries,
        template=option,
    ))


def generate_ideal_sentences(
    topic: str,
    n: int,
    llm: LlmProvider,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> list[str]:
    """Request ``n`` opinion sentences on a topic, re-requesting any
    shortfall up to ``max_retries`` times before giving up."""
    if n < 1:
        raise ValueError("need at least one sentence")
    collected: list[str] = []
    for attempt in range(max_retries + 1):
        if attempt > 0:
            _backoff_sleep(llm.backoff_base, attempt - 1)
        reply = _request(prompts.IDEAL_GEN, llm, max_retries, count=n - len(collected), topic=topic)
        parsed = prompts.parse_numbered(reply)
        for s in parsed:
            prompts.warn_if_over_limit(s, "ideal sentence")
        collected.extend(parsed)
        if len(collected) >= n:
            return collected[:n]
    raise ProviderError(
        f"under-delivery: got {len(collected)} of {n} sentences after {max_retries + 1} requests"
    )


def generate_resembling(
    sentence: str,
    llm: LlmProvider,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> str:
    """One sentence resembling the input, used for noisy singleton starts."""
    if not sentence.strip():
        raise ValueError("input sentence is empty")
    for attempt in range(max_retries + 1):
        if attempt > 0:
            _backoff_sleep(llm.backoff_base, attempt - 1)
        reply = _request(prompts.RESEMBLE_INIT, llm, max_retries, sentence=sentence)
        result = prompts.first_sentence(reply)
        if result:
            prompts.warn_if_over_limit(result, "resembling sentence")
            return result
    raise ProviderError(f"no resembling sentence after {max_retries + 1} requests")


DEFAULT_MESSAGE_TOPIC = "global warming"


def generate_candidates(
    s1: str,
    s2: str,
    option: int,
    k: int,
    llm: LlmProvider,
    max_retries: int = DEFAULT_MAX_RETRIES,
    topic: str = DEFAULT_MESSAGE_TOPIC,
) -> list[str]:
    """Aggregation candidates for two sentences via mediator option 1-3.

    Returns between 1 and ``k`` sentences; malformed reply lines are
    skipped, and a reply with no parseable candidate triggers a retry.
    ``topic`` fills the mediator persona in the system message.
    """
    if option not in prompts.AGGREGATION_OPTIONS:
        raise ValueError(f"candidate generation needs option 1-3, got {option}")
    if k < 1:
        raise ValueError("candidate count must be >= 1")
    template = prompts.AGGREGATION_OPTIONS[option]
    for attempt in range(max_retries + 1):
        if attempt > 0:
            _backoff_sleep(llm.backoff_base, attempt - 1)
        reply = _request(template, llm, max_retries, count=k, topic=topic, s1=s1, s2=s2)
        parsed = prompts.parse_numbered(reply)
        if parsed:
            for s in parsed:
                prompts.warn_if_over_limit(s, f"option-{option} candidate")
            return parsed[:k]
    raise ProviderError(f"no parseable candidates after {max_retries + 1} requests")


def generate_single_aggregate(
    s1: str,
    s2: str,
    llm: LlmProvider,
    max_retries: int = DEFAULT_MAX_RETRIES,
    topic: str = DEFAULT_MESSAGE_TOPIC,
) -> str:
    """Option 4: the option-1 prompt asked for one sentence, returned as-is."""
    for attempt in range(max_retries + 1):
        if attempt > 0:
            _backoff_sleep(llm.backoff_base, attempt - 1)
        reply = _request(prompts.MEDIATOR_4, llm, max_retries, count=1, topic=topic, s1=s1, s2=s2)
        result = prompts.first_sentence(reply)
        if result:
            prompts.warn_if_over_limit(result, "option-4 sentence")
            return result
    raise ProviderError(f"no aggregate sentence after {max_retries + 1} requests")


def generate_random_sentence(llm: LlmProvider, max_retries: int = DEFAULT_MAX_RETRIES) -> str:
    """Option 5: a completely random sentence."""
    for attempt in range(max_retries + 1):
        if attempt > 0:
            _backoff_sleep(llm.backoff_base, attempt - 1)
        reply = _request(prompts.MEDIATOR_5, llm, max_retries)
        result = prompts.first_sentence(reply)
        if result:
            return result
    raise ProviderError(f"no random sentence after {max_retries + 1} requests")


def embed_sentence(text: str, embedder: EmbeddingProvider) -> EmbedVec:
    """Embed a sentence, validating dimension and rejecting zero vectors."""
    trimmed = text.strip()
    if not trimmed:
        raise ValueError("cannot embed an empty sentence")
    vec = embedder.embed_text(trimmed)
    if vec.ndim != 1 or vec.shape[0] != embedder.dim:
        raise ProviderError(
            f"embedding dimension mismatch: got {vec.shape}, expected ({embedder.dim},)"
        )
    try:
        return EmbedVec(vec, source_text=trimmed)
    except ValueError as exc:
        raise ProviderError(str(exc)) from exc
