import json
from pathlib import Path

import pytest

from consensim.text import prompts

GOLDEN = json.loads((Path(__file__).parent / "data" / "prompts_golden.json").read_text())


@pytest.mark.parametrize("option", sorted(GOLDEN))
def test_rendered_prompts_match_golden(option):
    case = GOLDEN[option]
    message, prompt = prompts.TEMPLATES[option].render(**case["fields"])
    assert message == case["message"]
    assert prompt == case["prompt"]


def test_render_fails_on_missing_placeholder():
    with pytest.raises(ValueError):
        prompts.TEMPLATES[prompts.MEDIATOR_1].render(count=10)


# Parser corpus: (reply, expected sentences).  Covers the numbering styles
# the templates ask for plus the drift seen in practice.
PARSER_CASES = [
    ("1) a\n2) b\n3) c", ["a", "b", "c"]),
    ("1. alpha\n2. beta", ["alpha", "beta"]),
    ("1: one\n2: two", ["one", "two"]),
    ("1. a\n2) b", ["a", "b"]),                          # mixed numbering
    ("  3)   padded  ", ["padded"]),
    ("1)a", ["a"]),
    ("10) tenth item", ["tenth item"]),
    ("1) first\n\n2) second\n", ["first", "second"]),    # blank lines
    ("intro text\n1) real", ["real"]),                   # preamble skipped
    ("Sure! Here you go:\n1) yes\nthanks", ["yes"]),
    ("no numbering at all", []),
    ("", []),
    ("1)", []),                                          # empty item dropped
    ("1) trailing spaces   \n2) x", ["trailing spaces", "x"]),
    ("2) out of order\n1) still kept", ["out of order", "still kept"]),
    ("1) comma, and. punctuation!", ["comma, and. punctuation!"]),
    ("1 missing separator", []),
    ("a) letter label", []),
    ("12. double digit dot", ["double digit dot"]),
    ("1) unicode touché", ["unicode touché"]),
]


@pytest.mark.parametrize("reply,expected", PARSER_CASES)
def test_parse_numbered_corpus(reply, expected):
    assert prompts.parse_numbered(reply) == expected


def test_parse_preserves_reply_order_and_trims():
    out = prompts.parse_numbered("1)  b  \n2)  a  ")
    assert out == ["b", "a"]


def test_first_sentence_fallbacks():
    assert prompts.first_sentence("1) numbered") == "numbered"
    assert prompts.first_sentence("\n plain line \nmore") == "plain line"
    assert prompts.first_sentence("\n\n") == ""


def test_word_limit_warning_logged(caplog):
    long_sentence = " ".join(["word"] * 20)
    with caplog.at_level("WARNING"):
        prompts.warn_if_over_limit(long_sentence, "test sentence")
    assert "exceeds 15 words" in caplog.text
    caplog.clear()
    with caplog.at_level("WARNING"):
        prompts.warn_if_over_limit("short enough", "test sentence")
    assert caplog.text == ""
