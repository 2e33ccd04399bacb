"""hiliter: mine, model, and recommend highlight markup in Q&A answers."""

from hiliter.markup import (
    FormatType,
    HighlightSpan,
    ParsedAnswer,
    RawAnswer,
    Sentence,
    Token,
    parse_answer,
)

__all__ = [
    "FormatType",
    "HighlightSpan",
    "ParsedAnswer",
    "RawAnswer",
    "Sentence",
    "Token",
    "parse_answer",
]

__version__ = "0.1.0"
