"""Partial-match scoring, failure categorization, word-frequency analysis.

Evaluation credits each token independently (partial match): a span
recovered in part still counts its correct tokens. Metrics are
micro-averaged from corpus-wide summed counts.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

TokenRange = tuple[int, int]


class AlignmentError(ValueError):
    """Predictions being compared do not cover the same sentences."""


def _token_set(spans: Iterable[TokenRange], n_tokens: int) -> set[int]:
    covered: set[int] = set()
    for a, b in spans:
        if a < 0 or b > n_tokens:
            raise ValueError(f"span [{a},{b}) outside [0,{n_tokens})")
        covered.update(range(a, b))
    return covered


@dataclass(frozen=True)
class PartialMatchCounts:
    correct: int
    predicted: int
    gold: int

    def __post_init__(self):
        if not 0 <= self.correct <= min(self.predicted, self.gold):
            raise ValueError("correct must satisfy 0 <= correct <= min(predicted, gold)")

    def __add__(self, other: "PartialMatchCounts") -> "PartialMatchCounts":
        return PartialMatchCounts(
            self.correct + other.correct,
            self.predicted + other.predicted,
            self.gold + other.gold,
        )


def count_partial_match(
    predicted_spans: Sequence[TokenRange],
    gold_spans: Sequence[TokenRange],
    n_tokens: int,
) -> PartialMatchCounts:
    """Token-level counts; overlapping spans on one side collapse to a set."""
    predicted = _token_set(predicted_spans, n_tokens)
    gold = _token_set(gold_spans, n_tokens)
    return PartialMatchCounts(
        correct=len(predicted & gold), predicted=len(predicted), gold=len(gold)
    )


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    precision_defined: bool
    recall_defined: bool
    f1_defined: bool
    counts: PartialMatchCounts

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "precision_defined": self.precision_defined,
            "recall_defined": self.recall_defined,
            "f1_defined": self.f1_defined,
            "counts": {
                "correct": self.counts.correct,
                "predicted": self.counts.predicted,
                "gold": self.counts.gold,
            },
        }


def micro_metrics(stream: Iterable[PartialMatchCounts]) -> MetricsReport:
    """Sum counts across the test set, then apply the P/R/F1 formulas.

    A zero denominator yields 0.0 with the corresponding *_defined flag
    cleared instead of an error.
    """
    total = PartialMatchCounts(0, 0, 0)
    for counts in stream:
        total = total + counts
    p_defined = total.predicted > 0
    r_defined = total.gold > 0
    precision = total.correct / total.predicted if p_defined else 0.0
    recall = total.correct / total.gold if r_defined else 0.0
    f_defined = p_defined and r_defined and (precision + recall) > 0
    f1 = 2 * precision * recall / (precision + recall) if f_defined else 0.0
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        precision_defined=p_defined,
        recall_defined=r_defined,
        f1_defined=f_defined,
        counts=total,
    )


@dataclass(frozen=True)
class FailureBreakdown:
    """Counts of the three failure families, at token and instance level.

    Misidentification requires sibling-model predictions; when none were
    supplied the category is reported as not computed rather than being
    folded into missing identification.
    """

    misidentification: int
    missing_identification: int
    false_identification: int
    misidentification_instances: int
    missing_instances: int
    false_instances: int
    misidentification_computed: bool

    @property
    def total_tokens(self) -> int:
        return (
            self.misidentification
            + self.missing_identification
            + self.false_identification
        )

    def percentages(self) -> dict[str, float]:
        total = self.total_tokens
        if total == 0:
            return {
                "misidentification": 0.0,
                "missing_identification": 0.0,
                "false_identification": 0.0,
            }
        return {
            "misidentification": 100.0 * self.misidentification / total,
            "missing_identification": 100.0 * self.missing_identification / total,
            "false_identification": 100.0 * self.false_identification / total,
        }

    def instance_percentages(self) -> dict[str, float]:
        total = (
            self.misidentification_instances
            + self.missing_instances
            + self.false_instances
        )
        if total == 0:
            return {
                "misidentification": 0.0,
                "missing_identification": 0.0,
                "false_identification": 0.0,
            }
        return {
            "misidentification": 100.0 * self.misidentification_instances / total,
            "missing_identification": 100.0 * self.missing_instances / total,
            "false_identification": 100.0 * self.false_instances / total,
        }

    def to_dict(self) -> dict:
        return {
            "tokens": {
                "misidentification": self.misidentification,
                "missing_identification": self.missing_identification,
                "false_identification": self.false_identification,
            },
            "token_percentages": self.percentages(),
            "instances": {
                "misidentification": self.misidentification_instances,
                "missing_identification": self.missing_instances,
                "false_identification": self.false_instances,
            },
            "instance_percentages": self.instance_percentages(),
            "misidentification_computed": self.misidentification_computed,
        }


def categorize_failures(
    gold_spans: Sequence[Sequence[TokenRange]],
    predicted_spans: Sequence[Sequence[TokenRange]],
    sibling_predictions: Mapping[str, Sequence[Sequence[TokenRange]]],
    n_tokens: Sequence[int],
) -> FailureBreakdown:
    """Split failures into misidentification / missing / false identification.

    Per token: predicted-but-not-gold is a false identification; a missed
    gold token is a misidentification when any sibling model highlighted
    it, otherwise a missing identification. All prediction lists must be
    aligned sentence-for-sentence with the gold.
    """
    n_sent = len(gold_spans)
    if len(predicted_spans) != n_sent or len(n_tokens) != n_sent:
        raise AlignmentError("gold and predictions cover different sentence counts")
    for name, sib in sibling_predictions.items():
        if len(sib) != n_sent:
            raise AlignmentError(f"sibling {name!r} covers a different sentence count")
    has_siblings = bool(sibling_predictions)

    mis = missing = false = 0
    mis_inst = missing_inst = false_inst = 0
    for s in range(n_sent):
        n = n_tokens[s]
        gold = _token_set(gold_spans[s], n)
        pred = _token_set(predicted_spans[s], n)
        sib_union: set[int] = set()
        for sib in sibling_predictions.values():
            sib_union |= _token_set(sib[s], n)
        false += len(pred - gold)
        for t in gold - pred:
            if has_siblings and t in sib_union:
                mis += 1
            else:
                missing += 1
        # Instance granularity: wholly spurious predicted spans, and gold
        # spans with no predicted token at all.
        for a, b in predicted_spans[s]:
            if not (set(range(a, b)) & gold):
                false_inst += 1
        for a, b in gold_spans[s]:
            covered = set(range(a, b))
            if covered & pred:
                continue
            if has_siblings and covered & sib_union:
                mis_inst += 1
            else:
                missing_inst += 1
    return FailureBreakdown(
        misidentification=mis,
        missing_identification=missing,
        false_identification=false,
        misidentification_instances=mis_inst,
        missing_instances=missing_inst,
        false_instances=false_inst,
        misidentification_computed=has_siblings,
    )


@dataclass(frozen=True)
class FrequencySummary:
    mean: float
    median: float
    n: int


@dataclass(frozen=True)
class FrequencyReport:
    correct: FrequencySummary | None
    missed: FrequencySummary | None
    correct_frequencies: tuple[int, ...]
    missed_frequencies: tuple[int, ...]

    def to_dict(self) -> dict:
        def summ(s: FrequencySummary | None) -> dict | None:
            return None if s is None else {"mean": s.mean, "median": s.median, "n": s.n}

        return {"correct": summ(self.correct), "missed": summ(self.missed)}


def _freq_summary(values: list[int]) -> FrequencySummary | None:
    if not values:
        return None
    return FrequencySummary(
        mean=sum(values) / len(values),
        median=float(statistics.median(sorted(values))),
        n=len(values),
    )


def frequency_analysis(
    train_frequencies: Counter | Mapping[str, int],
    sentences: Sequence[tuple[Sequence[str], set[int], set[int]]],
) -> FrequencyReport:
    """Training-corpus frequency of gold words, split correct vs missed.

    ``sentences`` rows are (tokens, gold token indices, predicted token
    indices). A word's frequency is its lowercased occurrence count among
    highlighted tokens of the training data (0 when unseen).
    """
    correct: list[int] = []
    missed: list[int] = []
    for tokens, gold, predicted in sentences:
        for t in sorted(gold):
            freq = int(train_frequencies.get(tokens[t].lower(), 0))
            if t in predicted:
                correct.append(freq)
            else:
                missed.append(freq)
    return FrequencyReport(
        correct=_freq_summary(correct),
        missed=_freq_summary(missed),
        correct_frequencies=tuple(correct),
        missed_frequencies=tuple(missed),
    )
