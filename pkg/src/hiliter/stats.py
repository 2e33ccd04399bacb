"""Corpus-level prevalence and instance statistics for highlight markup."""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from hiliter.markup import FormatType, ParsedAnswer, span_token_range, split_sentences

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TypeStats:
    instances: int
    highlighted_words: int
    instance_word_counts: tuple[int, ...]


@dataclass(frozen=True)
class AnswerStats:
    post_id: int
    total_words: int
    per_type: Mapping[FormatType, TypeStats]
    highlighted_words_any: int  # union over types, each word counted once

    @property
    def total_instances(self) -> int:
        return sum(t.instances for t in self.per_type.values())


def compute_answer_stats(parsed: ParsedAnswer) -> AnswerStats:
    """Token-level counts for one answer.

    A word is a token from the shared tokenizer; a word counts as
    highlighted for a type when a span of that type covers it.
    """
    sentences = split_sentences(parsed.text, parsed.spans, answer_id=parsed.post_id)
    total_words = sum(len(s.tokens) for s in sentences)
    per_type: dict[FormatType, dict] = {}
    covered_any: set[tuple[int, int]] = set()
    for s_idx, sent in enumerate(sentences):
        for span in sent.spans:
            t0, t1 = span_token_range(span, sent.tokens)
            acc = per_type.setdefault(
                span.format, {"instances": 0, "words": set(), "sizes": []}
            )
            acc["instances"] += 1
            acc["sizes"].append(t1 - t0)
            for t in range(t0, t1):
                acc["words"].add((s_idx, t))
                covered_any.add((s_idx, t))
    return AnswerStats(
        post_id=parsed.post_id,
        total_words=total_words,
        per_type={
            fmt: TypeStats(
                instances=acc["instances"],
                highlighted_words=len(acc["words"]),
                instance_word_counts=tuple(acc["sizes"]),
            )
            for fmt, acc in per_type.items()
        },
        highlighted_words_any=len(covered_any),
    )


def _summary(values: list[float] | list[int]) -> dict | None:
    """mean/median/max; median by exact selection. None when empty."""
    if not values:
        return None
    ordered = sorted(values)
    return {
        "mean": sum(ordered) / len(ordered),
        "median": float(statistics.median(ordered)),
        "max": float(ordered[-1]),
        "n": len(ordered),
    }


@dataclass
class _TypeAccumulator:
    answers_with_type: int = 0
    total_instances: int = 0
    instances_per_answer: list[int] = field(default_factory=list)
    pct_words_per_answer: list[float] = field(default_factory=list)
    instance_word_counts: list[int] = field(default_factory=list)

    def merge(self, other: "_TypeAccumulator") -> None:
        self.answers_with_type += other.answers_with_type
        self.total_instances += other.total_instances
        self.instances_per_answer.extend(other.instances_per_answer)
        self.pct_words_per_answer.extend(other.pct_words_per_answer)
        self.instance_word_counts.extend(other.instance_word_counts)


@dataclass
class StatsAccumulator:
    """Mergeable aggregation state.

    Per-answer value lists are kept whole (medians are exact) and sorted
    before any floating-point reduction, so aggregation order can never
    change the report.
    """

    n_answers: int = 0
    n_highlighted: int = 0
    overall_instances: list[int] = field(default_factory=list)
    overall_pct_words: list[float] = field(default_factory=list)
    per_type: dict[FormatType, _TypeAccumulator] = field(default_factory=dict)

    def add(self, stats: AnswerStats) -> None:
        self.n_answers += 1
        if stats.total_instances > 0:
            self.n_highlighted += 1
            self.overall_instances.append(stats.total_instances)
            if stats.total_words > 0:
                self.overall_pct_words.append(
                    100.0 * stats.highlighted_words_any / stats.total_words
                )
        for fmt, ts in stats.per_type.items():
            acc = self.per_type.setdefault(fmt, _TypeAccumulator())
            acc.answers_with_type += 1
            acc.total_instances += ts.instances
            acc.instances_per_answer.append(ts.instances)
            if stats.total_words > 0:
                acc.pct_words_per_answer.append(
                    100.0 * ts.highlighted_words / stats.total_words
                )
            acc.instance_word_counts.extend(ts.instance_word_counts)

    def merge(self, other: "StatsAccumulator") -> None:
        self.n_answers += other.n_answers
        self.n_highlighted += other.n_highlighted
        self.overall_instances.extend(other.overall_instances)
        self.overall_pct_words.extend(other.overall_pct_words)
        for fmt, acc in other.per_type.items():
            self.per_type.setdefault(fmt, _TypeAccumulator()).merge(acc)

    def report(self) -> dict:
        all_instances = sum(acc.total_instances for acc in self.per_type.values())
        per_type = {}
        for fmt in FormatType:
            acc = self.per_type.get(fmt)
            if acc is None:
                continue
            per_type[fmt.value] = {
                "n_answers": acc.answers_with_type,
                "pct_answers": (
                    acc.answers_with_type / self.n_answers if self.n_answers else 0.0
                ),
                "instances_per_answer": _summary(acc.instances_per_answer),
                "pct_words_highlighted": _summary(acc.pct_words_per_answer),
                "instance_share": (
                    acc.total_instances / all_instances if all_instances else 0.0
                ),
                "words_per_instance": _summary(acc.instance_word_counts),
                "total_instances": acc.total_instances,
            }
        return {
            "schema_version": SCHEMA_VERSION,
            "n_answers": self.n_answers,
            "n_highlighted_answers": self.n_highlighted,
            "pct_highlighted": (
                self.n_highlighted / self.n_answers if self.n_answers else None
            ),
            "overall": {
                "instances_per_answer": _summary(self.overall_instances),
                "pct_words_highlighted": _summary(self.overall_pct_words),
            },
            "per_type": per_type,
            "per_answer_columns_condition_on_type_present": True,
        }


def aggregate(stream: Iterable[AnswerStats]) -> dict:
    """Aggregate answer statistics into the corpus report."""
    acc = StatsAccumulator()
    for stats in stream:
        acc.add(stats)
    return acc.report()


def export_distributions_csv(acc: StatsAccumulator, out_dir: str | Path) -> list[Path]:
    """One CSV per distribution, for plotting; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    tables: dict[str, list] = {
        "overall_instances_per_answer": sorted(acc.overall_instances),
        "overall_pct_words_highlighted": sorted(acc.overall_pct_words),
    }
    for fmt, t_acc in acc.per_type.items():
        tables[f"{fmt.value}_instances_per_answer"] = sorted(t_acc.instances_per_answer)
        tables[f"{fmt.value}_pct_words_highlighted"] = sorted(t_acc.pct_words_per_answer)
        tables[f"{fmt.value}_words_per_instance"] = sorted(t_acc.instance_word_counts)
    for name, values in tables.items():
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value"])
            writer.writerows([v] for v in values)
        written.append(path)
    return written
