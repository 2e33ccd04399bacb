"""Draft-time suggestion pipeline: run every model, settle conflicts by
confidence, and write accepted suggestions back as markdown."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from hiliter.markup import DraftParse, FormatType, parse_draft
from hiliter.labeler.model import LabelerModel

DEFAULT_TIE_ORDER = (
    FormatType.CODE,
    FormatType.BOLD,
    FormatType.ITALIC,
    FormatType.HEADING,
)

_MARKDOWN_MARKERS = {
    FormatType.CODE: ("`", "`"),
    FormatType.BOLD: ("**", "**"),
    FormatType.ITALIC: ("*", "*"),
    FormatType.HEADING: ("## ", ""),
}

_TYPE_SORT = {fmt: k for k, fmt in enumerate(FormatType)}


class ConfigError(ValueError):
    pass


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class Suggestion:
    """A proposed highlight; ``start``/``end`` are code-point offsets into
    the exact draft string the suggestion was computed from."""

    id: str
    format: FormatType
    sentence: int
    token_start: int
    token_end: int
    start: int
    end: int
    content: str
    confidence: float
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "format": self.format.value,
            "sentence": self.sentence,
            "token_start": self.token_start,
            "token_end": self.token_end,
            "start": self.start,
            "end": self.end,
            "content": self.content,
            "confidence": self.confidence,
            "note": self.note,
        }


@dataclass(frozen=True)
class ResolutionPolicy:
    mode: str = "highest_confidence"  # or "all_with_scores"
    tie_order: tuple[FormatType, ...] = DEFAULT_TIE_ORDER

    def __post_init__(self):
        if self.mode not in ("highest_confidence", "all_with_scores"):
            raise ConfigError(f"unknown policy mode {self.mode!r}")
        if len(set(self.tie_order)) != len(DEFAULT_TIE_ORDER):
            raise ConfigError("tie_order must rank all four modeled types")


def _suggestion_id(draft: str, start: int, end: int, fmt: FormatType) -> str:
    key = f"{start}:{end}:{fmt.value}:{draft}".encode("utf-8")
    return hashlib.blake2b(key, digest_size=8).hexdigest()


def _is_whole_line(draft: str, start: int, end: int) -> bool:
    if start > 0 and draft[start - 1] != "\n":
        return False
    tail = end
    while tail < len(draft) and draft[tail] in " \t":
        tail += 1
    return tail == len(draft) or draft[tail] == "\n"


def suggest_all(
    draft: str,
    models: Mapping[FormatType, LabelerModel],
    parsed: DraftParse | None = None,
) -> tuple[list[Suggestion], list[str]]:
    """Run every model over the draft's sentences.

    Existing highlights are preserved: tokens already inside any markup
    span are never part of a suggestion. Returns suggestions ordered by
    (sentence, start, type) plus parser warnings.
    """
    if not models:
        raise ConfigError("no models loaded")
    parsed = parse_draft(draft) if parsed is None else parsed
    suggestions: list[Suggestion] = []
    for s_idx, sentence in enumerate(parsed.sentences):
        taken = set()
        for span in sentence.spans:
            taken.update(
                t
                for t, tok in enumerate(sentence.tokens)
                if tok.start >= span.start and tok.end <= span.end
            )
        token_texts = [t.text for t in sentence.tokens]
        for fmt in sorted(models, key=_TYPE_SORT.get):
            prediction = models[fmt].predict(token_texts)
            for span in prediction.spans:
                if any(t in taken for t in range(span.start, span.end)):
                    continue
                plain_start = sentence.start + sentence.tokens[span.start].start
                plain_end = sentence.start + sentence.tokens[span.end - 1].end
                start, end = parsed.src_range(plain_start, plain_end)
                sugg_fmt, note = fmt, None
                if fmt is FormatType.HEADING and not _is_whole_line(draft, start, end):
                    sugg_fmt = FormatType.BOLD
                    note = "demoted from heading: markdown headings are line-scoped"
                suggestions.append(
                    Suggestion(
                        id=_suggestion_id(draft, start, end, sugg_fmt),
                        format=sugg_fmt,
                        sentence=s_idx,
                        token_start=span.start,
                        token_end=span.end,
                        start=start,
                        end=end,
                        content=parsed.plain[plain_start:plain_end],
                        confidence=span.confidence,
                        note=note,
                    )
                )
    suggestions.sort(key=lambda s: (s.sentence, s.start, _TYPE_SORT[s.format]))
    return suggestions, list(parsed.warnings)


def _preference_key(policy: ResolutionPolicy, s: Suggestion) -> tuple:
    # Greater is better: strict confidence first, then tie order, then
    # position for full determinism.
    tie = policy.tie_order.index(s.format) if s.format in policy.tie_order else 99
    return (s.confidence, -tie, -s.sentence, -s.token_start, -s.token_end)


def resolve_conflicts(
    suggestions: Sequence[Suggestion], policy: ResolutionPolicy | None = None
) -> list[Suggestion]:
    """Pick survivors among token-overlapping suggestions.

    In highest_confidence mode each connected component of the overlap
    graph keeps exactly its best suggestion; in all_with_scores mode
    everything is returned ranked by confidence.
    """
    policy = policy or ResolutionPolicy()
    if policy.mode == "all_with_scores":
        return sorted(
            suggestions,
            key=lambda s: (-s.confidence, s.sentence, s.start, _TYPE_SORT[s.format]),
        )
    remaining = list(suggestions)
    survivors: list[Suggestion] = []
    while remaining:
        component = [remaining.pop(0)]
        grew = True
        while grew:
            grew = False
            for other in remaining[:]:
                if any(
                    other.sentence == member.sentence
                    and other.token_start < member.token_end
                    and member.token_start < other.token_end
                    for member in component
                ):
                    component.append(other)
                    remaining.remove(other)
                    grew = True
        survivors.append(max(component, key=lambda s: _preference_key(policy, s)))
    survivors.sort(key=lambda s: (s.sentence, s.start, _TYPE_SORT[s.format]))
    return survivors


def render_markdown(draft: str, accepted: Sequence[Suggestion]) -> str:
    """Insert markdown markers for the accepted suggestions.

    Every character of the draft is preserved; only marker strings are
    inserted at suggestion boundaries. Token-overlapping accepted
    suggestions cannot be rendered and raise RenderError.
    """
    for a in accepted:
        for b in accepted:
            if a is b or a.sentence != b.sentence:
                continue
            if a.token_start < b.token_end and b.token_start < a.token_end:
                raise RenderError(
                    f"accepted suggestions overlap: {a.id} and {b.id}"
                )
    insertions: list[tuple[int, int, str]] = []
    for s in accepted:
        open_marker, close_marker = _MARKDOWN_MARKERS[s.format]
        insertions.append((s.start, 1, open_marker))
        if close_marker:
            insertions.append((s.end, 0, close_marker))
    # Closers sort before openers at equal positions so adjacent spans nest
    # correctly; stable sort keeps insertion order otherwise.
    insertions.sort(key=lambda item: (item[0], item[1]))
    out: list[str] = []
    pos = 0
    for at, _kind, marker in insertions:
        out.append(draft[pos:at])
        out.append(marker)
        pos = at
    out.append(draft[pos:])
    return "".join(out)


def load_model_dir(path) -> dict[FormatType, LabelerModel]:
    """Load every readable .hlm file; later files win on duplicate types.

    Unreadable files are skipped here; callers that need to surface them
    (the model-listing endpoint) inspect headers separately.
    """
    from pathlib import Path

    from hiliter.labeler.serialization import FILE_EXTENSION, LoadError, load_model

    models: dict[FormatType, LabelerModel] = {}
    for file in sorted(Path(path).glob(f"*{FILE_EXTENSION}")):
        try:
            model = load_model(file)
        except LoadError:
            continue
        models[model.config.format] = model
    return models
