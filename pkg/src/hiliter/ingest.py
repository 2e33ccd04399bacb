"""Corpus input/output: data-dump XML, JSON Lines, dataset files."""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import IO, Iterable, Iterator

from hiliter.markup import FormatType, HighlightSpan, ParsedAnswer, RawAnswer


def read_posts_xml(path: str | Path) -> Iterator[RawAnswer]:
    """Stream answer rows (PostTypeId="2") from a Stack Exchange Posts XML dump."""
    for _event, elem in ET.iterparse(str(path), events=("end",)):
        if elem.tag == "row":
            if elem.get("PostTypeId") == "2":
                post_id = int(elem.get("Id"))
                body = elem.get("Body") or ""
                yield RawAnswer(post_id=post_id, body=body)
            elem.clear()


def read_answers_jsonl(path: str | Path) -> Iterator[RawAnswer]:
    """Read answers from JSON Lines with fields {"post_id", "body"}."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            yield RawAnswer(post_id=int(obj["post_id"]), body=obj["body"])


def read_answers(path: str | Path) -> Iterator[RawAnswer]:
    """Dispatch on extension: .xml -> data-dump rows, otherwise JSON Lines."""
    if str(path).lower().endswith(".xml"):
        return read_posts_xml(path)
    return read_answers_jsonl(path)


def span_to_dict(span: HighlightSpan) -> dict:
    return {
        "format": span.format.value,
        "start": span.start,
        "end": span.end,
        "content": span.content,
    }


def span_from_dict(obj: dict) -> HighlightSpan:
    return HighlightSpan(
        format=FormatType(obj["format"]),
        start=int(obj["start"]),
        end=int(obj["end"]),
        content=obj["content"],
    )


def parsed_answer_to_dict(parsed: ParsedAnswer) -> dict:
    return {
        "post_id": parsed.post_id,
        "text": parsed.text,
        "code_blocks": list(parsed.code_blocks),
        "spans": [span_to_dict(s) for s in parsed.spans],
        "warnings": list(parsed.warnings),
    }


def parsed_answer_from_dict(obj: dict) -> ParsedAnswer:
    return ParsedAnswer(
        post_id=int(obj["post_id"]),
        text=obj["text"],
        code_blocks=tuple(obj.get("code_blocks", ())),
        spans=tuple(span_from_dict(s) for s in obj.get("spans", ())),
        warnings=tuple(obj.get("warnings", ())),
    )


def write_parsed_jsonl(parsed: Iterable[ParsedAnswer], out: IO[str]) -> int:
    n = 0
    for p in parsed:
        out.write(json.dumps(parsed_answer_to_dict(p), ensure_ascii=False) + "\n")
        n += 1
    return n


def read_parsed_jsonl(path: str | Path) -> Iterator[ParsedAnswer]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parsed_answer_from_dict(json.loads(line))


def write_dataset_jsonl(rows: Iterable[dict], path: str | Path) -> int:
    """Write labeled sentences, one {"tokens","labels","post_id"} object per line."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_dataset_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def canonical_json(obj: object) -> str:
    """Deterministic JSON used for on-the-wire payloads and CLI output."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
