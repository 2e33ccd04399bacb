"""Inline highlight-markup parsing for Q&A answer bodies.

Recognizes the five highlight formats (code, bold, italic, delete, heading)
in both their HTML-tag and Markdown forms, strips ``<pre>`` code blocks,
and segments the remaining plain text into sentences and tokens.

All offsets are Unicode code points. Parsing is pure: the same input
string always produces the same result, so everything here is safe to
call concurrently.
"""

from __future__ import annotations

import html
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class FormatType(Enum):
    """The five highlight formats, grouped by rendering effect."""

    CODE = "code"
    BOLD = "bold"
    ITALIC = "italic"
    DELETE = "delete"
    HEADING = "heading"


class UnknownMarkerError(ValueError):
    """Raised for a tag name or markdown delimiter outside the taxonomy."""


# HTML tag name (lowercase) -> format.
_TAG_FORMATS: dict[str, FormatType] = {
    "code": FormatType.CODE,
    "b": FormatType.BOLD,
    "strong": FormatType.BOLD,
    "i": FormatType.ITALIC,
    "em": FormatType.ITALIC,
    "del": FormatType.DELETE,
    "s": FormatType.DELETE,
    **{f"h{k}": FormatType.HEADING for k in range(1, 7)},
}

# Markdown delimiter -> format. Only these forms are recognized; all other
# markdown (links, lists, blockquotes...) passes through as literal text.
_MD_FORMATS: dict[str, FormatType] = {
    "`": FormatType.CODE,
    "**": FormatType.BOLD,
    "__": FormatType.BOLD,
    "*": FormatType.ITALIC,
}

# Non-highlight tags that end a line of text when stripped, so that block
# structure survives into the plain text as newlines.
_BLOCK_TAGS = frozenset(
    "p div br hr li ul ol blockquote table thead tbody tr td th dl dt dd".split()
)

_TAG_RE = re.compile(r"<(/?)([a-zA-Z][a-zA-Z0-9]*)((?:\s[^<>]*)?)(/?)>")
_ENTITY_RE = re.compile(r"&(?:#[0-9]{1,8}|#[xX][0-9a-fA-F]{1,8}|[a-zA-Z][a-zA-Z0-9]{1,31});")
_MD_HEADING_RE = re.compile(r"(#{1,6})[ \t]+")
_PRE_OPEN_RE = re.compile(r"<pre\b[^>]*>", re.IGNORECASE)
_PRE_CLOSE_RE = re.compile(r"</pre\s*>", re.IGNORECASE)

_SENTENCE_TERMINATORS = frozenset(".!?")
_DETACH_PUNCT = frozenset(".,!?;:'\"()[]{}") | frozenset("“”‘’«»")


def classify_marker(marker: str) -> FormatType:
    """Map an HTML tag name or markdown delimiter to its format.

    Raises UnknownMarkerError for anything outside the taxonomy; callers
    skip the span in that case.
    """
    low = marker.lower()
    if low in _TAG_FORMATS:
        return _TAG_FORMATS[low]
    if marker in _MD_FORMATS:
        return _MD_FORMATS[marker]
    if 1 <= len(marker) <= 6 and set(marker) == {"#"}:
        return FormatType.HEADING
    raise UnknownMarkerError(marker)


@dataclass(frozen=True)
class HighlightSpan:
    """A contiguous highlighted region; offsets index the plain text."""

    format: FormatType
    start: int
    end: int
    content: str

    def overlaps(self, other: "HighlightSpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    """One sentence of an answer, with its tokens and contained spans.

    ``start`` is the sentence's offset within the answer's plain text;
    token and span offsets are relative to the sentence text.
    """

    answer_id: int | None
    index: int
    text: str
    start: int
    tokens: tuple[Token, ...]
    spans: tuple[HighlightSpan, ...]


@dataclass(frozen=True)
class RawAnswer:
    post_id: int
    body: str


@dataclass(frozen=True)
class ParsedAnswer:
    post_id: int
    text: str
    code_blocks: tuple[str, ...]
    spans: tuple[HighlightSpan, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class MarkupScan:
    """Full scanner output: plain text, spans, warnings, and a source map.

    ``src_map[i]`` is the half-open source range the plain character ``i``
    came from; synthetic characters (inserted line breaks) carry an empty
    range at their insertion point.
    """

    plain: str
    spans: tuple[HighlightSpan, ...]
    warnings: tuple[str, ...]
    src_map: tuple[tuple[int, int], ...]


def strip_code_blocks(body: str) -> tuple[str, list[str], list[str]]:
    """Remove every ``<pre>...</pre>`` region from the body.

    Returns (text, code_blocks, warnings). Blocks keep document order; an
    unterminated ``<pre>`` swallows the remainder of the body and records
    a warning.
    """
    text, blocks, warnings, _ = _strip_code_blocks_mapped(body)
    return text, blocks, warnings


def _strip_code_blocks_mapped(
    body: str,
) -> tuple[str, list[str], list[str], list[int]]:
    parts: list[str] = []
    src_index: list[int] = []
    blocks: list[str] = []
    warnings: list[str] = []
    pos = 0
    while True:
        m = _PRE_OPEN_RE.search(body, pos)
        if m is None:
            parts.append(body[pos:])
            src_index.extend(range(pos, len(body)))
            break
        parts.append(body[pos : m.start()])
        src_index.extend(range(pos, m.start()))
        cm = _PRE_CLOSE_RE.search(body, m.end())
        if cm is None:
            blocks.append(body[m.end() :])
            warnings.append("unterminated <pre>: remainder of body treated as code block")
            break
        blocks.append(body[m.end() : cm.start()])
        pos = cm.end()
    return "".join(parts), blocks, warnings, src_index


@dataclass
class _Open:
    kind: str  # "html" | "md" | "md_heading"
    format: FormatType
    marker: str  # tag name or delimiter string
    plain_start: int
    src_start: int
    src_end: int


class _Scanner:
    """Single left-to-right pass turning markup into plain text + spans."""

    def __init__(self, text: str):
        self.text = text
        self.out: list[str] = []
        self.src: list[tuple[int, int]] = []
        self.spans: list[list] = []  # [format, start, end], offsets mutable
        self.warnings: list[str] = []
        self.stack: list[_Open] = []
        self.html_code_depth = 0

    # -- emission helpers ------------------------------------------------

    def emit(self, chars: str, src_range: tuple[int, int]) -> None:
        a, b = src_range
        for k, ch in enumerate(chars):
            # First char owns the whole source range; extras are zero-width.
            self.out.append(ch)
            self.src.append((a, b) if k == 0 else (b, b))

    def emit_literal(self, start: int, end: int) -> None:
        for p in range(start, end):
            self.out.append(self.text[p])
            self.src.append((p, p + 1))

    def emit_break(self, at: int) -> None:
        # Synthetic newline standing in for stripped block structure.
        if self.out and self.out[-1] != "\n":
            self.out.append("\n")
            self.src.append((at, at))

    def emit_span(self, fmt: FormatType, start: int, end: int) -> None:
        while start < end and self.out[start].isspace():
            start += 1
        while end > start and self.out[end - 1].isspace():
            end -= 1
        if end <= start:
            return
        # Same-type spans must stay disjoint: a new span swallowing earlier
        # ones (nested same-type markup) replaces them; a partial overlap
        # (cross-nesting) cannot be represented and is dropped.
        contained: list[int] = []
        for k, other in enumerate(self.spans):
            if other[0] is fmt and start < other[2] and other[1] < end:
                if start <= other[1] and other[2] <= end:
                    contained.append(k)
                else:
                    self.warnings.append(
                        f"dropped {fmt.value} span overlapping an earlier {fmt.value} span"
                    )
                    return
        for k in reversed(contained):
            del self.spans[k]
        self.spans.append([fmt, start, end])

    # -- restore of provisional markdown delimiters ----------------------

    def restore_md_literals(self, upto_newline: bool) -> None:
        """Re-insert unmatched emphasis delimiters as literal text.

        Called at each newline and at end of input, so offset shifts stay
        line-local. Spans and still-open entries after the insertion point
        are shifted right.
        """
        pending = [o for o in self.stack if o.kind == "md"]
        if not pending:
            return
        self.stack = [o for o in self.stack if o.kind != "md"]
        for entry in sorted(pending, key=lambda o: o.plain_start):
            pos = entry.plain_start
            marker = entry.marker
            width = len(marker)
            for k, ch in enumerate(marker):
                self.out.insert(pos + k, ch)
                self.src.insert(pos + k, (entry.src_start + k, entry.src_start + k + 1))
            for sp in self.spans:
                if sp[1] >= pos:
                    sp[1] += width
                if sp[2] > pos:
                    sp[2] += width
            for other in self.stack:
                if other.plain_start >= pos:
                    other.plain_start += width
            self.warnings.append(
                f"unterminated markdown delimiter {marker!r}: span dropped, kept as text"
            )

    def close_headings_at_line_end(self) -> None:
        for idx in range(len(self.stack) - 1, -1, -1):
            if self.stack[idx].kind == "md_heading":
                entry = self.stack.pop(idx)
                self.emit_span(entry.format, entry.plain_start, len(self.out))

    # -- tag handling -----------------------------------------------------

    def handle_tag(self, m: re.Match) -> None:
        closing, name, _attrs, selfclose = m.group(1), m.group(2).lower(), m.group(3), m.group(4)
        fmt = _TAG_FORMATS.get(name)
        if fmt is None:
            if name in _BLOCK_TAGS:
                self.emit_break(m.start())
            return  # other HTML: strip the tag, keep its content
        if selfclose:
            return
        if fmt is FormatType.HEADING:
            self.emit_break(m.start())
        if not closing:
            self.stack.append(_Open("html", fmt, name, len(self.out), m.start(), m.end()))
            if fmt is FormatType.CODE:
                self.html_code_depth += 1
            return
        for idx in range(len(self.stack) - 1, -1, -1):
            entry = self.stack[idx]
            if entry.kind == "html" and entry.format is fmt:
                del self.stack[idx]
                self.emit_span(fmt, entry.plain_start, len(self.out))
                if fmt is FormatType.CODE:
                    self.html_code_depth -= 1
                return
        self.warnings.append(f"stray closing tag </{name}> removed")

    def handle_md_marker(self, i: int, marker: str) -> bool:
        """Open or close an emphasis delimiter at source position i.

        Returns False when the delimiter is not usable here (caller emits
        it as literal text).
        """
        end = i + len(marker)
        prev_plain = self.out[-1] if self.out else ""
        can_close = bool(prev_plain) and not prev_plain.isspace()
        if can_close:
            for idx in range(len(self.stack) - 1, -1, -1):
                entry = self.stack[idx]
                if entry.kind == "md" and entry.marker == marker:
                    if entry.plain_start < len(self.out):
                        del self.stack[idx]
                        self.emit_span(entry.format, entry.plain_start, len(self.out))
                        return True
                    break
        nxt = self.text[end] if end < len(self.text) else ""
        if len(marker) == 1 and nxt == marker:
            return False  # part of a longer run already rejected as **/__
        if nxt and not nxt.isspace():
            self.stack.append(_Open("md", _MD_FORMATS[marker], marker, len(self.out), i, end))
            return True
        return False

    def handle_backtick(self, i: int) -> int:
        """Inline code delimited by single backticks; literal content."""
        line_end = self.text.find("\n", i + 1)
        if line_end == -1:
            line_end = len(self.text)
        j = self.text.find("`", i + 1)
        if j == -1 or j >= line_end:
            self.warnings.append("unterminated ` delimiter: span dropped, kept as text")
            self.emit_literal(i, i + 1)
            return i + 1
        if j == i + 1:  # `` -> no content, keep both literal
            self.emit_literal(i, i + 2)
            return i + 2
        start = len(self.out)
        self.emit_literal(i + 1, j)
        self.emit_span(FormatType.CODE, start, len(self.out))
        return j + 1

    def handle_entity(self, i: int) -> int:
        m = _ENTITY_RE.match(self.text, i)
        if m is not None:
            decoded = html.unescape(m.group(0))
            if decoded != m.group(0):
                self.emit(decoded, (i, m.end()))
                return m.end()
        self.emit_literal(i, i + 1)
        return i + 1

    # -- main loop ---------------------------------------------------------

    def run(self) -> MarkupScan:
        text = self.text
        n = len(text)
        i = 0
        while i < n:
            ch = text[i]
            if ch == "\n":
                self.restore_md_literals(upto_newline=True)
                self.close_headings_at_line_end()
                self.emit_literal(i, i + 1)
                i += 1
                continue
            if ch == "<":
                m = _TAG_RE.match(text, i)
                if m is not None:
                    self.handle_tag(m)
                    i = m.end()
                    continue
                self.emit_literal(i, i + 1)
                i += 1
                continue
            if ch == "&":
                i = self.handle_entity(i)
                continue
            if self.html_code_depth == 0:
                if ch == "`":
                    i = self.handle_backtick(i)
                    continue
                if ch in "*_":
                    for marker in (ch * 2, ch):
                        if marker not in _MD_FORMATS:
                            continue
                        if text.startswith(marker, i) and self.handle_md_marker(i, marker):
                            i += len(marker)
                            break
                    else:
                        self.emit_literal(i, i + 1)
                        i += 1
                    continue
                if ch == "#" and (not self.out or self.out[-1] == "\n"):
                    m = _MD_HEADING_RE.match(text, i)
                    if m is not None:
                        self.stack.append(
                            _Open("md_heading", FormatType.HEADING, m.group(1), len(self.out), i, m.end())
                        )
                        i = m.end()
                        continue
            self.emit_literal(i, i + 1)
            i += 1
        self.restore_md_literals(upto_newline=False)
        self.close_headings_at_line_end()
        for entry in reversed(self.stack):
            if entry.kind == "html":
                self.warnings.append(
                    f"unterminated <{entry.marker}> tag: span dropped"
                )
        plain = "".join(self.out)
        spans = tuple(
            sorted(
                (HighlightSpan(f, a, b, plain[a:b]) for f, a, b in self.spans),
                key=lambda s: (s.start, s.end, s.format.value),
            )
        )
        return MarkupScan(plain, spans, tuple(self.warnings), tuple(self.src))


def scan_markup(text: str) -> MarkupScan:
    """Scan highlight markup in text whose ``<pre>`` blocks were removed."""
    return _Scanner(text).run()


def extract_spans(text: str) -> tuple[str, list[HighlightSpan], list[str]]:
    """Strip Table-taxonomy markers and return (plain_text, spans, warnings)."""
    scan = scan_markup(text)
    return scan.plain, list(scan.spans), list(scan.warnings)


def parse_answer(raw: RawAnswer) -> ParsedAnswer:
    """Parse one answer body into plain text, code blocks, and spans.

    The body is NFC-normalized on ingest so downstream hashing and offsets
    are stable across equivalent encodings.
    """
    body = unicodedata.normalize("NFC", raw.body)
    text, blocks, warnings = strip_code_blocks(body)
    scan = scan_markup(text)
    return ParsedAnswer(
        post_id=raw.post_id,
        text=scan.plain,
        code_blocks=tuple(blocks),
        spans=scan.spans,
        warnings=tuple(warnings) + scan.warnings,
    )


@dataclass(frozen=True)
class DraftParse:
    """Parse of an in-progress draft, keeping a map back to the raw string.

    Unlike corpus ingest, the draft is *not* normalized: every offset in
    ``plain_to_src`` indexes the exact submitted string.
    """

    plain: str
    spans: tuple[HighlightSpan, ...]
    code_blocks: tuple[str, ...]
    warnings: tuple[str, ...]
    plain_to_src: tuple[tuple[int, int], ...]
    sentences: tuple[Sentence, ...]

    def src_range(self, start: int, end: int) -> tuple[int, int]:
        """Map a half-open plain-text range to a range in the raw draft."""
        if start >= end:
            raise ValueError("empty range")
        return self.plain_to_src[start][0], self.plain_to_src[end - 1][1]


def parse_draft(draft: str, answer_id: int | None = None) -> DraftParse:
    text, blocks, warnings, pre_map = _strip_code_blocks_mapped(draft)
    scan = scan_markup(text)
    composed: list[tuple[int, int]] = []
    for a, b in scan.src_map:
        if a == b:  # synthetic char: anchor at the nearest real source point
            anchor = pre_map[a] if a < len(pre_map) else len(draft)
            composed.append((anchor, anchor))
        else:
            composed.append((pre_map[a], pre_map[b - 1] + 1))
    sentences = split_sentences(scan.plain, scan.spans, answer_id=answer_id)
    return DraftParse(
        plain=scan.plain,
        spans=scan.spans,
        code_blocks=tuple(blocks),
        warnings=tuple(warnings) + scan.warnings,
        plain_to_src=tuple(composed),
        sentences=tuple(sentences),
    )


# ---------------------------------------------------------------------------
# Sentence segmentation and tokenization
# ---------------------------------------------------------------------------


def _covering(intervals: Sequence[tuple[int, int]], pos: int) -> bool:
    return any(a <= pos < b for a, b in intervals)


def _strictly_inside(intervals: Sequence[tuple[int, int]], pos: int) -> bool:
    return any(a < pos < b for a, b in intervals)


def split_sentences(
    plain_text: str,
    spans: Sequence[HighlightSpan] = (),
    answer_id: int | None = None,
) -> list[Sentence]:
    """Split plain text into sentences without cutting through any span.

    Boundaries are newlines plus '.', '!', '?' followed by whitespace and
    an uppercase letter (or end of text); terminators inside Code spans
    never split.
    """
    n = len(plain_text)
    if n == 0:
        return []
    all_iv = [(s.start, s.end) for s in spans]
    code_iv = [(s.start, s.end) for s in spans if s.format is FormatType.CODE]
    cuts: set[int] = set()
    for i, ch in enumerate(plain_text):
        if ch == "\n":
            if not _strictly_inside(all_iv, i + 1):
                cuts.add(i + 1)
            continue
        if ch not in _SENTENCE_TERMINATORS:
            continue
        if _covering(code_iv, i):
            continue
        p = i + 1
        if p >= n or _strictly_inside(all_iv, p):
            continue
        j = p
        while j < n and plain_text[j] in " \t":
            j += 1
        if j == p:  # terminator not followed by whitespace: not a boundary
            continue
        if j >= n or plain_text[j] == "\n" or plain_text[j].isupper():
            cuts.add(p)
    bounds = [0, *sorted(cuts), n]
    sentences: list[Sentence] = []
    for a, b in zip(bounds, bounds[1:]):
        while a < b and plain_text[a].isspace():
            a += 1
        while b > a and plain_text[b - 1].isspace():
            b -= 1
        if b <= a:
            continue
        sent_text = plain_text[a:b]
        sent_spans = tuple(
            HighlightSpan(s.format, s.start - a, s.end - a, s.content)
            for s in spans
            if a <= s.start and s.end <= b
        )
        tokens = tuple(tokenize(sent_text, sent_spans))
        if not tokens:
            continue
        sentences.append(
            Sentence(
                answer_id=answer_id,
                index=len(sentences),
                text=sent_text,
                start=a,
                tokens=tokens,
                spans=sent_spans,
            )
        )
    return sentences


_BRACKET_OPEN = {")": "(", "]": "[", "}": "{"}
_BRACKET_CLOSE = {"(": ")", "[": "]", "{": "}"}


def tokenize(sentence_text: str, spans: Sequence[HighlightSpan] = ()) -> list[Token]:
    """Whitespace tokenization with punctuation detachment.

    Sentence punctuation is peeled off token edges unless the character
    sits inside a Code span. A bracket whose partner lies inside the word
    is word structure (``foo()``, ``arr[0]``), not sentence punctuation,
    and is kept. Tokens are additionally cut at every span boundary so
    span edges always coincide with token edges.
    """
    code_iv = [(s.start, s.end) for s in spans if s.format is FormatType.CODE]
    edges = sorted({s.start for s in spans} | {s.end for s in spans})
    tokens: list[Token] = []

    def peelable(pos: int) -> bool:
        return sentence_text[pos] in _DETACH_PUNCT and not _covering(code_iv, pos)

    for m in re.finditer(r"\S+", sentence_text):
        piece_bounds = [m.start()]
        piece_bounds.extend(e for e in edges if m.start() < e < m.end())
        piece_bounds.append(m.end())
        for a, b in zip(piece_bounds, piece_bounds[1:]):
            tail = []
            while b > a and peelable(b - 1):
                ch = sentence_text[b - 1]
                partner = _BRACKET_OPEN.get(ch)
                if partner is not None and sentence_text.find(partner, a, b - 1) > a:
                    break  # closes a bracket opened inside the word
                tail.append(Token(ch, b - 1, b))
                b -= 1
            lead = []
            while a < b and peelable(a):
                ch = sentence_text[a]
                partner = _BRACKET_CLOSE.get(ch)
                if partner is not None:
                    at = sentence_text.find(partner, a + 1, b)
                    if 0 <= at < b - 1:
                        break  # opens a bracket closed inside the word
                lead.append(Token(ch, a, a + 1))
                a += 1
            tokens.extend(lead)
            if b > a:
                tokens.append(Token(sentence_text[a:b], a, b))
            tokens.extend(reversed(tail))
    return tokens


def span_token_range(
    span: HighlightSpan, tokens: Sequence[Token]
) -> tuple[int, int]:
    """Token index range [first, last) covered by a span.

    Raises ValueError when the span edges do not line up with token
    boundaries (a parser contract violation).
    """
    starts = {t.start: k for k, t in enumerate(tokens)}
    ends = {t.end: k for k, t in enumerate(tokens)}
    if span.start not in starts or span.end not in ends:
        raise ValueError(
            f"span [{span.start},{span.end}) not aligned to token boundaries"
        )
    return starts[span.start], ends[span.end] + 1
