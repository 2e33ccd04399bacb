"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured value so a run log doubles as a report.

The corpus-scale reference numbers (tens of millions of answers) are not
reproducible at desk scale; the final test encodes them and runs only
when a full data dump is supplied via HILITER_POSTS_XML.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from hiliter.dataset import (
    TagDictionary,
    clean_code_instances,
    encode_bioe,
    fuzzy_lookup,
    is_equation,
    is_path,
)
from hiliter.evaluator import (
    PartialMatchCounts,
    categorize_failures,
    count_partial_match,
    micro_metrics,
)
from hiliter.labeler import (
    LabelerConfig,
    TrainingParams,
    decode_spans,
    gradient_check,
    load_model,
    save_model,
    train,
)
from hiliter.markup import (
    FormatType,
    HighlightSpan,
    RawAnswer,
    parse_answer,
    parse_draft,
    split_sentences,
    tokenize,
)
from hiliter.recommend import (
    ResolutionPolicy,
    Suggestion,
    render_markdown,
    resolve_conflicts,
)
from hiliter.stats import StatsAccumulator, compute_answer_stats

from synth import make_code_corpus, token_f1
from test_evaluator import brute_force_counts, random_spans
from test_labeler import reference_decode
from test_recommend import brute_force_survivors, make_suggestion
from test_stats import TEN_ANSWERS, build_report, recount_report

FIXTURES = Path(__file__).parent / "fixtures"


def report(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}")


class TestParserCorpus:
    def test_criterion_parser_corpus(self, parser_corpus):
        started = time.monotonic()
        assert len(parser_corpus) >= 50
        mismatches = 0
        for case in parser_corpus:
            parsed = parse_answer(RawAnswer(case["post_id"], case["body"]))
            got = [[s.format.value, s.start, s.end, s.content] for s in parsed.spans]
            if (
                parsed.text != case["text"]
                or got != case["spans"]
                or list(parsed.code_blocks) != case["code_blocks"]
                or len(parsed.warnings) < case["min_warnings"]
            ):
                mismatches += 1
        elapsed = time.monotonic() - started
        assert mismatches == 0
        assert elapsed < 5.0
        report(
            f"parser corpus: {len(parser_corpus)} hand-labeled posts, "
            f"0 mismatches in {elapsed:.2f}s"
        )


class TestMetricOracle:
    def test_criterion_metric_oracle(self):
        rng = random.Random(615)
        for _ in range(1000):
            n = rng.randint(1, 20)
            predicted = random_spans(rng, n)
            gold = random_spans(rng, n)
            counts = count_partial_match(predicted, gold, n)
            assert (
                counts.correct,
                counts.predicted,
                counts.gold,
            ) == brute_force_counts(predicted, gold, n)
        netstat = count_partial_match([(0, 2), (3, 6)], [(0, 6)], 6)
        metrics = micro_metrics([netstat])
        assert metrics.precision == 1.0
        assert metrics.recall == 5 / 6
        report("metric oracle: 1000 random cases exact; netstat P=1.0 R=5/6")


class TestBioeRoundTrip:
    def test_criterion_bioe_round_trip(self, parser_corpus):
        checked = 0
        for case in parser_corpus:
            parsed = parse_answer(RawAnswer(case["post_id"], case["body"]))
            for sent in split_sentences(parsed.text, parsed.spans):
                for fmt in FormatType:
                    labeled = encode_bioe(sent, fmt)
                    decoded = decode_spans(labeled.labels)
                    want = sorted(
                        (
                            next(k for k, t in enumerate(sent.tokens) if t.start == s.start),
                            next(k for k, t in enumerate(sent.tokens) if t.end == s.end) + 1,
                        )
                        for s in sent.spans
                        if s.format is fmt
                    )
                    assert sorted(decoded) == want
                    checked += 1
        rng = random.Random(42)
        for _ in range(1000):
            n = rng.randint(1, 15)
            words = [chr(ord("a") + k) * 3 for k in range(n)]
            text = " ".join(words)
            spans = []
            cursor = 0
            while cursor < n:
                if rng.random() < 0.35:
                    width = rng.randint(1, min(3, n - cursor))
                    a = cursor * 4
                    b = (cursor + width - 1) * 4 + 3
                    spans.append(HighlightSpan(FormatType.CODE, a, b, text[a:b]))
                    cursor += width + 1
                else:
                    cursor += 1
            tokens = tokenize(text, spans)
            from hiliter.markup import Sentence

            sent = Sentence(1, 0, text, 0, tuple(tokens), tuple(spans))
            labeled = encode_bioe(sent, FormatType.CODE)
            decoded = decode_spans(labeled.labels)
            want = sorted(
                (
                    next(k for k, t in enumerate(tokens) if t.start == s.start),
                    next(k for k, t in enumerate(tokens) if t.end == s.end) + 1,
                )
                for s in spans
            )
            assert sorted(decoded) == want
        for length in (1, 2, 3, 4):
            for seq in itertools.product("OBIE", repeat=length):
                assert decode_spans(seq) == reference_decode(seq), seq
        report(
            f"BIOE round trip: {checked} fixture sentences + 1000 random span "
            "sets exact; repair table verified for all label sequences len<=4"
        )


class TestGradientCheck:
    def test_criterion_gradient_check(self):
        started = time.monotonic()
        tokens = ["call", "foo()", "with", "args", "then", "bar()", "done", "."]
        labels = ["O", "B-code", "O", "O", "O", "B-code", "O", "O"]
        worst = 0.0
        for seed in range(10):
            config = LabelerConfig(
                format=FormatType.CODE,
                embed_dim=16,
                n_layers=2,
                table_rows={"norm": 64, "prefix": 32, "suffix": 32, "shape": 16},
                seed=seed,
            )
            err = gradient_check(config, tokens, labels, n_samples=120, seed=seed)
            worst = max(worst, err)
            assert err < 1e-4, f"config seed {seed}: {err}"
        elapsed = time.monotonic() - started
        assert elapsed < 30.0
        report(
            f"gradient check: 10 random configs, max rel error {worst:.2e} "
            f"< 1e-4 in {elapsed:.1f}s"
        )


class TestLearnability:
    def test_criterion_learnability(self):
        started = time.monotonic()
        train_set = make_code_corpus(200, seed=1234)
        held_out = make_code_corpus(100, seed=9999)
        config = LabelerConfig(format=FormatType.CODE, seed=42)
        model, log = train(train_set, config, TrainingParams())  # paper defaults
        train_f1, _, _ = token_f1(model, train_set)
        held_f1, _, _ = token_f1(model, held_out)
        elapsed = time.monotonic() - started
        assert train_f1 >= 0.95
        assert held_f1 >= 0.90
        assert elapsed < 60.0
        report(
            f"learnability: 3 epochs lr=0.001 batch=32 -> train F1 "
            f"{train_f1:.3f} >= 0.95, held-out F1 {held_f1:.3f} >= 0.90 "
            f"in {elapsed:.1f}s (losses {', '.join(f'{x:.3f}' for x in log.epoch_losses)})"
        )


class TestDeterminism:
    def test_criterion_determinism(self, tmp_path):
        corpus = make_code_corpus(60, seed=5)
        config = LabelerConfig(
            format=FormatType.CODE,
            embed_dim=32,
            n_layers=2,
            table_rows={"norm": 256, "prefix": 128, "suffix": 128, "shape": 64},
            seed=42,
        )
        first, _ = train(corpus, config, TrainingParams(seed=42))
        second, _ = train(corpus, config, TrainingParams(seed=42))
        path_a, path_b = tmp_path / "a.hlm", tmp_path / "b.hlm"
        save_model(first, path_a)
        save_model(second, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()
        loaded = load_model(path_a)
        probe = ["try", "probe()", "now", "."]
        assert np.array_equal(first.predict(probe).probs, loaded.predict(probe).probs)
        report(
            "determinism: two seed-42 runs produced bit-identical model files; "
            "save/load round trip bit-identical predictions"
        )


class TestCleaningRules:
    def test_criterion_cleaning_rules(self):
        dictionary = TagDictionary.from_iterable(["mysql", "django", "hashtable"])
        assert is_path("/usr/local/bin/")
        assert is_equation("O(log n)")
        assert fuzzy_lookup("MySql", dictionary, 90) == ("mysql", 100.0)
        kept, _ = clean_code_instances(["client_wait_for()"], dictionary)
        assert kept == ["client_wait_for()"]
        fixture = (
            ["client_wait_for()", "obj.method(arg)", "x_var", "do_thing()", "getPid"] * 20
        )
        assert len(fixture) == 100
        once, first_report = clean_code_instances(fixture, dictionary)
        twice, second_report = clean_code_instances(once, dictionary)
        assert twice == once
        assert (
            second_report.path
            == second_report.equation
            == second_report.software_or_terminology
            == 0
        )
        report(
            "cleaning rules: path/equation/software flags correct, genuine "
            "code retained, idempotent on 100-instance fixture"
        )


class TestFailureTaxonomy:
    def test_criterion_failure_taxonomy(self):
        # 30 tokens; hand-derived counts:
        #   gold {2,3,4,10,11,20,25,26,27}; predicted {2,3,14,15,20}
        #   sibling covers {4,5,10,11}
        #   FP {14,15}=2; FN {4,10,11,25,26,27}=6 of which sibling covers
        #   {4,10,11} -> 3 misidentified, {25,26,27} -> 3 missing
        gold = [[(2, 5), (10, 12), (20, 21), (25, 28)]]
        predicted = [[(2, 4), (14, 16), (20, 21)]]
        siblings = {"bold": [[(4, 6), (10, 12)]]}
        breakdown = categorize_failures(gold, predicted, siblings, [30])
        assert breakdown.false_identification == 2
        assert breakdown.misidentification == 3
        assert breakdown.missing_identification == 3
        pct = breakdown.percentages()
        assert pct["false_identification"] == pytest.approx(25.0)
        assert pct["misidentification"] == pytest.approx(37.5)
        assert pct["missing_identification"] == pytest.approx(37.5)
        assert sum(pct.values()) == pytest.approx(100.0)
        report(
            "failure taxonomy: 30-token fixture reproduced hand counts "
            "(2 false / 3 mis / 3 missing), percentages sum to 100%"
        )


class TestConflictResolution:
    def test_criterion_conflict_resolution(self, overfit_code_model):
        policy = ResolutionPolicy()
        formats = [FormatType.CODE, FormatType.BOLD, FormatType.ITALIC, FormatType.HEADING]
        ranges = [(a, b) for a in range(6) for b in range(a + 1, min(a + 4, 7))]
        checked = 0
        for k in (1, 2, 3):
            for combo in itertools.combinations(ranges, k):
                for confs in itertools.product((0.3, 0.8), repeat=k):
                    suggestions = [
                        make_suggestion(a, b, conf, formats[i % 4])
                        for i, ((a, b), conf) in enumerate(zip(combo, confs))
                    ]
                    assert resolve_conflicts(suggestions, policy) == brute_force_survivors(
                        suggestions, policy
                    )
                    checked += 1
        short = [(a, b) for a in range(5) for b in range(a + 1, min(a + 3, 6))]
        for k in (4, 5):
            for combo in itertools.combinations(short, k):
                suggestions = [
                    make_suggestion(a, b, 0.2 + 0.15 * i, formats[i % 4])
                    for i, (a, b) in enumerate(combo)
                ]
                assert resolve_conflicts(suggestions, policy) == brute_force_survivors(
                    suggestions, policy
                )
                checked += 1

        from hiliter.recommend import suggest_all

        draft = "call foo() then bar() here.\nplain words after"
        suggestions, _ = suggest_all(draft, {FormatType.CODE: overfit_code_model})
        accepted = resolve_conflicts(suggestions, policy)
        rendered = render_markdown(draft, accepted)
        reparsed = parse_draft(rendered)
        assert {(s.format, s.content) for s in reparsed.spans} == {
            (s.format, s.content) for s in accepted
        }
        report(
            f"conflict resolution: {checked} exhaustive fixtures equal brute "
            "force; render->parse round trip exact"
        )


class TestStatsOracle:
    def test_criterion_stats_oracle(self):
        base = build_report(TEN_ANSWERS)
        oracle = recount_report(TEN_ANSWERS)
        assert base["n_answers"] == oracle["n_answers"] == 10
        assert base["pct_highlighted"] == oracle["pct_highlighted"]
        for fmt, got in base["per_type"].items():
            want = oracle["per_type"][fmt]
            assert got["instances_per_answer"]["mean"] == want["mean_instances"]
            assert got["instances_per_answer"]["median"] == want["median_instances"]
            assert got["pct_words_highlighted"]["mean"] == want["mean_pct_words"]
            assert got["instance_share"] == want["instance_share"]
            assert got["words_per_instance"]["max"] == want["max_words_per_instance"]
        rng = random.Random(31)
        for _ in range(20):
            shuffled = list(TEN_ANSWERS)
            rng.shuffle(shuffled)
            assert build_report(shuffled) == base
        report(
            "stats oracle: 10-answer fixture equals independent recount "
            "field-for-field; invariant under 20 shuffles"
        )


@pytest.mark.skipif(
    "HILITER_POSTS_XML" not in os.environ,
    reason="full-dump regression runs only with HILITER_POSTS_XML set "
    "(multi-hour; not part of CI)",
)
class TestFullDumpRegression:
    def test_criterion_full_dump(self):
        from hiliter.ingest import read_posts_xml

        acc = StatsAccumulator()
        for raw in read_posts_xml(os.environ["HILITER_POSTS_XML"]):
            acc.add(compute_answer_stats(parse_answer(raw)))
        result = acc.report()
        prevalence = result["pct_highlighted"]
        code_share = result["per_type"]["code"]["pct_answers"]
        assert abs(prevalence - 0.476) < 0.005
        assert abs(code_share - 0.385) < 0.005
        report(
            f"full dump: prevalence {prevalence:.3f} (47.6% +/- 0.5pp), "
            f"code answer share {code_share:.3f} (38.5% +/- 0.5pp)"
        )
