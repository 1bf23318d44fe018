"""Prompt templates and reply parsing for the sentence providers.

The templates are fixed strings with named placeholders; rendering them is
the only place prompts are assembled, so the exact wording is pinned by the
golden tests.  Replies are expected as numbered lists; the parser is
tolerant about the numbering separator (``1)``, ``1.``, ``1:``) since
models drift between them.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

log = logging.getLogger(__name__)

WORD_LIMIT = 15

IDEAL_GEN = "ideal_gen"
RESEMBLE_INIT = "resemble_init"
MEDIATOR_1 = "mediator_1"
MEDIATOR_2 = "mediator_2"
MEDIATOR_3 = "mediator_3"
MEDIATOR_4 = "mediator_4"
MEDIATOR_5 = "mediator_5"

AGGREGATION_OPTIONS = {1: MEDIATOR_1, 2: MEDIATOR_2, 3: MEDIATOR_3}


@dataclass(frozen=True)
class PromptTemplate:
    option: str
    message_pattern: str
    prompt_pattern: str

    def render(self, **fields) -> tuple[str, str]:
        """Return (system message, user prompt) with placeholders filled."""
        try:
            return (
                self.message_pattern.format(**fields),
                self.prompt_pattern.format(**fields),
            )
        except KeyError as exc:
            raise ValueError(f"missing placeholder for {self.option}: {exc}") from exc


_NUMBERING_NOTE = (
    "Number your answers (i.e., 1), 2), 3), 4), 5), and so on) "
    "for each sentence you propose."
)

TEMPLATES: dict[str, PromptTemplate] = {
    IDEAL_GEN: PromptTemplate(
        IDEAL_GEN,
        "",
        "Give me {count} different sentences that are well structured "
        "about how to deal with {topic} with at most of 15 words",
    ),
    RESEMBLE_INIT: PromptTemplate(
        RESEMBLE_INIT,
        "",
        "Give me a well-structured sentence with a maximum of 15 words, "
        "resembling this sentence: {sentence}",
    ),
    MEDIATOR_1: PromptTemplate(
        MEDIATOR_1,
        "You are a mediator trying to find agreed wording for how to deal "
        "with {topic} based on existing sentences. Give a straightforward "
        "answer with no introduction to help people reach an agreed wording "
        "of a coherent sentence.",
        "Generate {count} possible different well-structured sentences that "
        "aggregate the following two sentences. Make sure each sentence has "
        "at most 15 words. " + _NUMBERING_NOTE + "\n{s1}\n{s2}",
    ),
    MEDIATOR_2: PromptTemplate(
        MEDIATOR_2,
        "As a mediator, you need to find a consensus on {topic} solutions. "
        "Provide straightforward and numbered suggestions to help reach a "
        "clear and agreed-upon sentence.",
        "Generate {count} concise and clear sentences that blend the "
        "following two sentences into one coherent idea: Ensure each "
        "sentence is no longer than 15 words. " + _NUMBERING_NOTE + "\n{s1}\n{s2}",
    ),
    MEDIATOR_3: PromptTemplate(
        MEDIATOR_3,
        "You are acting as a mediator to achieve a common statement on "
        "{topic}. Give direct and numbered suggestions to assist in forming "
        "a unified and coherent sentence.",
        "Create {count} unique, well-structured sentences that combine "
        "these two sentences into one unified thought: Each sentence should "
        "be a maximum of 15 words. " + _NUMBERING_NOTE + "\n{s1}\n{s2}",
    ),
    MEDIATOR_5: PromptTemplate(
        MEDIATOR_5,
        "You are a mediator.",
        "Give me one completely random well-structured sentence of at most 15 words.",
    ),
}
# The single-sentence baseline reuses the first aggregation template with a
# count of one; only the template id differs.
TEMPLATES[MEDIATOR_4] = PromptTemplate(
    MEDIATOR_4,
    TEMPLATES[MEDIATOR_1].message_pattern,
    TEMPLATES[MEDIATOR_1].prompt_pattern,
)


_NUMBERED_LINE = re.compile(r"^\s*\d+\s*[).:]\s*(.+?)\s*$")


def parse_numbered(reply: str) -> list[str]:
    """Extract the sentences of a numbered-list reply, in reply order.

    Lines without a recognisable ``N)`` / ``N.`` / ``N:`` prefix are
    skipped; extracted sentences are trimmed and never empty.
    """
    out = []
    for line in reply.splitlines():
        m = _NUMBERED_LINE.match(line)
        if m and m.group(1):
            out.append(m.group(1))
    return out


def first_sentence(reply: str) -> str:
    """Best-effort single sentence from a reply: the first numbered item if
    the model numbered anyway, otherwise the first non-empty line."""
    numbered = parse_numbered(reply)
    if numbered:
        return numbered[0]
    for line in reply.splitlines():
        line = line.strip()
        if line:
            return line
    return ""


def word_count(sentence: str) -> int:
    return len(sentence.split())


def warn_if_over_limit(sentence: str, context: str) -> None:
    # The limit is requested in the prompt, not enforced afterwards.
    if word_count(sentence) > WORD_LIMIT:
        log.warning("%s exceeds %d words: %r", context, WORD_LIMIT, sentence)
