"""Training-data construction: misuse cleaning, BIOE encoding, splitting.

Cleaning removes highlighted instances that abuse the code format (paths,
equations, software names) and text-format instances whose content is
really code, then strips every non-target span before label encoding.
The pipeline order is fixed: code cleanup, then the text cross-check,
then foreign-span stripping.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Iterable, Sequence

from hiliter.markup import (
    FormatType,
    HighlightSpan,
    ParsedAnswer,
    Sentence,
    span_token_range,
    split_sentences,
)

_PATH_RE = re.compile(r"^(/[^/ ]*)+/?$")
_COMPLEXITY_RE = re.compile(r"O\(.+\)")
_EQ_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+|[+\-*/=<>^%()]|\s+")
_EQ_OPERATORS = frozenset("+-*/=<>^%")

MODELED_TYPES = (
    FormatType.CODE,
    FormatType.BOLD,
    FormatType.ITALIC,
    FormatType.HEADING,
)


class SplitError(ValueError):
    pass


class EncodingError(ValueError):
    """A span does not line up with token boundaries."""


@dataclass(frozen=True)
class TagDictionary:
    """Lowercased site-tag names used to spot software/terminology misuse."""

    entries: frozenset[str]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("tag dictionary must not be empty")

    @classmethod
    def from_iterable(cls, names: Iterable[str]) -> "TagDictionary":
        return cls(frozenset(n.strip().lower() for n in names if n.strip()))

    @classmethod
    def load(cls, path: str | Path) -> "TagDictionary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_iterable(fh)


def is_path(content: str) -> bool:
    """Full-string match of the filesystem-path pattern ``^(/[^/ ]*)+/?$``."""
    return _PATH_RE.fullmatch(content) is not None


def is_equation(content: str) -> bool:
    """Heuristic equation detector.

    True for complexity forms like ``O(log n)`` and for strings built only
    from digits, short identifiers (<= 3 chars), mathematical operators,
    parentheses, and whitespace, with at least one operator.
    """
    stripped = content.strip()
    if not stripped:
        return False
    if _COMPLEXITY_RE.fullmatch(stripped):
        return True
    pos = 0
    saw_operator = False
    while pos < len(stripped):
        m = _EQ_TOKEN_RE.match(stripped, pos)
        if m is None:
            return False
        tok = m.group(0)
        if tok[0].isalpha() or tok[0] == "_":
            if len(tok) > 3:
                return False
        elif tok in _EQ_OPERATORS:
            saw_operator = True
        pos = m.end()
    return saw_operator


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def similarity_ratio(a: str, b: str) -> float:
    """100 * (1 - distance / max_len); 100.0 for equal strings."""
    if a == b:
        return 100.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 100.0
    return 100.0 * (1.0 - levenshtein(a, b) / longest)


def fuzzy_lookup(
    content: str, dictionary: TagDictionary, threshold: float = 90.0
) -> tuple[str, float] | None:
    """Best dictionary entry with similarity >= threshold, else None.

    Comparison is case-insensitive; an exact (case-folded) hit scores 100
    and wins outright. Score ties break lexicographically.
    """
    needle = content.lower()
    if needle in dictionary.entries:
        return needle, 100.0
    best: tuple[str, float] | None = None
    for entry in dictionary.entries:
        # Length difference lower-bounds the distance, so this bounds the
        # best achievable score; skip entries that cannot reach threshold.
        longest = max(len(entry), len(needle), 1)
        bound = 100.0 * (1.0 - abs(len(entry) - len(needle)) / longest)
        if bound < threshold - 1e-9:
            continue
        score = similarity_ratio(needle, entry)
        if score < threshold:
            continue
        if best is None or score > best[1] or (score == best[1] and entry < best[0]):
            best = (entry, score)
    return best


@dataclass
class CleaningReport:
    path: int = 0
    equation: int = 0
    software_or_terminology: int = 0
    cross_highlighted_code_in_text: int = 0
    foreign_tags_stripped: int = 0

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "equation": self.equation,
            "software_or_terminology": self.software_or_terminology,
            "cross_highlighted_code_in_text": self.cross_highlighted_code_in_text,
            "foreign_tags_stripped": self.foreign_tags_stripped,
        }

    def merge(self, other: "CleaningReport") -> None:
        self.path += other.path
        self.equation += other.equation
        self.software_or_terminology += other.software_or_terminology
        self.cross_highlighted_code_in_text += other.cross_highlighted_code_in_text
        self.foreign_tags_stripped += other.foreign_tags_stripped


def code_misuse_reason(
    content: str, dictionary: TagDictionary | None, threshold: float = 90.0
) -> str | None:
    """Why a code-highlighted content string is misuse, or None to keep it."""
    if is_path(content):
        return "path"
    if is_equation(content):
        return "equation"
    if dictionary is not None and fuzzy_lookup(content, dictionary, threshold):
        return "software_or_terminology"
    return None


def clean_code_instances(
    instances: Sequence[str],
    dictionary: TagDictionary | None,
    threshold: float = 90.0,
) -> tuple[list[str], CleaningReport]:
    """Drop path/equation/software instances from code-highlighted contents."""
    report = CleaningReport()
    kept = []
    for content in instances:
        reason = code_misuse_reason(content, dictionary, threshold)
        if reason is None:
            kept.append(content)
        else:
            setattr(report, reason, getattr(report, reason) + 1)
    return kept, report


def clean_text_instances(
    text_instances: Sequence[str], code_content_set: frozenset[str] | set[str]
) -> tuple[list[str], CleaningReport]:
    """Drop text-format instances whose exact content is code-highlighted."""
    report = CleaningReport()
    kept = []
    for content in text_instances:
        if content in code_content_set:
            report.cross_highlighted_code_in_text += 1
        else:
            kept.append(content)
    return kept, report


def strip_foreign_tags(sentence: Sentence, target: FormatType) -> Sentence:
    """Keep only the target type's spans; other spans' text stays as tokens."""
    kept = tuple(s for s in sentence.spans if s.format is target)
    if len(kept) == len(sentence.spans):
        return sentence
    return Sentence(
        answer_id=sentence.answer_id,
        index=sentence.index,
        text=sentence.text,
        start=sentence.start,
        tokens=sentence.tokens,
        spans=kept,
    )


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    source_post_id: int | None
    format: FormatType

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise EncodingError("tokens and labels must have equal length")

    def to_dict(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "labels": list(self.labels),
            "post_id": self.source_post_id,
        }

    @classmethod
    def from_dict(cls, obj: dict, fmt: FormatType) -> "LabeledSentence":
        return cls(
            tokens=tuple(obj["tokens"]),
            labels=tuple(obj["labels"]),
            source_post_id=obj.get("post_id"),
            format=fmt,
        )


def encode_bioe(sentence: Sentence, target: FormatType) -> LabeledSentence:
    """Label tokens B/I/E inside target spans, O outside.

    Single-token spans become a lone B; multi-token spans B I... E.
    """
    labels = ["O"] * len(sentence.tokens)
    suffix = target.value
    for span in sentence.spans:
        if span.format is not target:
            continue
        try:
            t0, t1 = span_token_range(span, sentence.tokens)
        except ValueError as exc:
            raise EncodingError(str(exc)) from exc
        if t1 - t0 == 1:
            labels[t0] = f"B-{suffix}"
        else:
            labels[t0] = f"B-{suffix}"
            for t in range(t0 + 1, t1 - 1):
                labels[t] = f"I-{suffix}"
            labels[t1 - 1] = f"E-{suffix}"
    return LabeledSentence(
        tokens=tuple(t.text for t in sentence.tokens),
        labels=tuple(labels),
        source_post_id=sentence.answer_id,
        format=target,
    )


def split_dataset(dataset: Sequence, ratio: float, seed: int = 42) -> tuple[list, list]:
    """Seeded shuffle then prefix split; |train| = round(ratio * N)."""
    if not 0.0 < ratio < 1.0:
        raise SplitError(f"ratio must lie in (0, 1), got {ratio}")
    if len(dataset) < 2:
        raise SplitError("need at least 2 items to split")
    order = list(dataset)
    Random(seed).shuffle(order)
    n_train = round(ratio * len(order))
    return order[:n_train], order[n_train:]


@dataclass(frozen=True)
class BuiltDataset:
    format: FormatType
    sentences: tuple[LabeledSentence, ...]
    report: CleaningReport
    seed: int


def build_dataset(
    answers: Iterable[ParsedAnswer],
    target: FormatType,
    dictionary: TagDictionary | None,
    threshold: float = 90.0,
    seed: int = 42,
) -> BuiltDataset:
    """Clean + encode one format type's dataset from parsed answers.

    Pass 1 collects and cleans the corpus-wide code instances; pass 2
    applies the cross-check and encodes sentences. Reordering the text
    cross-check before code cleanup would change results, so the order is
    baked in here.
    """
    if target not in MODELED_TYPES:
        raise ValueError(f"no dataset is built for {target.value}")
    report = CleaningReport()
    per_answer_sentences: list[list[Sentence]] = []
    code_contents: list[str] = []
    for parsed in answers:
        sentences = split_sentences(parsed.text, parsed.spans, answer_id=parsed.post_id)
        per_answer_sentences.append(sentences)
        for sent in sentences:
            code_contents.extend(
                s.content for s in sent.spans if s.format is FormatType.CODE
            )
    kept_code, code_report = clean_code_instances(code_contents, dictionary, threshold)
    report.merge(code_report)
    kept_code_set = frozenset(kept_code)
    removed_code_set = frozenset(code_contents) - kept_code_set

    labeled: list[LabeledSentence] = []
    for sentences in per_answer_sentences:
        for sent in sentences:
            target_spans = []
            for span in sent.spans:
                if span.format is not target:
                    continue
                if target is FormatType.CODE:
                    if span.content in removed_code_set:
                        continue
                    target_spans.append(span)
                else:
                    if span.content in kept_code_set:
                        report.cross_highlighted_code_in_text += 1
                        continue
                    target_spans.append(span)
            if not target_spans:
                continue
            report.foreign_tags_stripped += sum(
                1 for s in sent.spans if s.format is not target
            )
            clean_sent = Sentence(
                answer_id=sent.answer_id,
                index=sent.index,
                text=sent.text,
                start=sent.start,
                tokens=sent.tokens,
                spans=tuple(target_spans),
            )
            labeled.append(encode_bioe(clean_sent, target))
    return BuiltDataset(
        format=target, sentences=tuple(labeled), report=report, seed=seed
    )


def highlighted_word_frequencies(train_rows: Iterable[dict]) -> Counter:
    """Occurrence counts of lowercased tokens at non-O positions."""
    freq: Counter = Counter()
    for row in train_rows:
        for token, label in zip(row["tokens"], row["labels"]):
            if label != "O":
                freq[token.lower()] += 1
    return freq
