"""BIOE encoding, foreign-span stripping, dataset building and splitting."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiliter.dataset import (
    EncodingError,
    LabeledSentence,
    SplitError,
    TagDictionary,
    build_dataset,
    encode_bioe,
    split_dataset,
    strip_foreign_tags,
)
from hiliter.labeler import decode_spans
from hiliter.markup import (
    FormatType,
    HighlightSpan,
    RawAnswer,
    Sentence,
    Token,
    extract_spans,
    parse_answer,
    split_sentences,
    tokenize,
)


def sentence_from_text(text: str, spans=(), answer_id=1) -> Sentence:
    return Sentence(
        answer_id=answer_id,
        index=0,
        text=text,
        start=0,
        tokens=tuple(tokenize(text, spans)),
        spans=tuple(spans),
    )


class TestEncodeBioe:
    def test_multiword_span_b_i_i_e(self):
        text = "git push --force --all"
        span = HighlightSpan(FormatType.CODE, 0, 22, text)
        labeled = encode_bioe(sentence_from_text(text, [span]), FormatType.CODE)
        assert labeled.labels == ("B-code", "I-code", "I-code", "E-code")

    def test_single_token_span_is_lone_b(self):
        text = "use client_wait_for() now"
        span = HighlightSpan(FormatType.CODE, 4, 21, "client_wait_for()")
        labeled = encode_bioe(sentence_from_text(text, [span]), FormatType.CODE)
        assert labeled.labels == ("O", "B-code", "O")

    def test_no_spans_all_o(self):
        labeled = encode_bioe(sentence_from_text("just words here"), FormatType.BOLD)
        assert labeled.labels == ("O", "O", "O")

    def test_two_token_span_is_b_e(self):
        text = "git push now"
        span = HighlightSpan(FormatType.CODE, 0, 8, "git push")
        labeled = encode_bioe(sentence_from_text(text, [span]), FormatType.CODE)
        assert labeled.labels == ("B-code", "E-code", "O")

    def test_misaligned_span_raises(self):
        bad = Sentence(
            answer_id=1,
            index=0,
            text="abcd",
            start=0,
            tokens=(Token("abcd", 0, 4),),
            spans=(HighlightSpan(FormatType.BOLD, 1, 3, "bc"),),
        )
        with pytest.raises(EncodingError):
            encode_bioe(bad, FormatType.BOLD)

    def test_label_format_suffix(self):
        text = "a bold word"
        span = HighlightSpan(FormatType.BOLD, 2, 6, "bold")
        labeled = encode_bioe(sentence_from_text(text, [span]), FormatType.BOLD)
        assert labeled.labels == ("O", "B-bold", "O")


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_bioe_round_trip_random_span_sets(data):
    """decode_spans(encode_bioe(s)) reproduces the span set exactly."""
    n_tokens = data.draw(st.integers(min_value=1, max_value=14))
    words = [chr(ord("a") + k) * 2 for k in range(n_tokens)]
    text = " ".join(words)
    starts = [k * 3 for k in range(n_tokens)]
    bounds = data.draw(
        st.lists(st.integers(0, n_tokens - 1), max_size=4, unique=True).map(sorted)
    )
    spans = []
    used = set()
    for t0 in bounds:
        if t0 in used:
            continue
        t1 = data.draw(st.integers(t0, min(t0 + 3, n_tokens - 1)))
        if any(t in used for t in range(t0, t1 + 1)):
            continue
        used.update(range(t0, t1 + 1))
        spans.append(
            HighlightSpan(
                FormatType.CODE, starts[t0], starts[t1] + 2, text[starts[t0] : starts[t1] + 2]
            )
        )
    sent = sentence_from_text(text, spans)
    labeled = encode_bioe(sent, FormatType.CODE)
    decoded = decode_spans(labeled.labels)
    expected = sorted(
        (next(k for k, t in enumerate(sent.tokens) if t.start == s.start),
         next(k for k, t in enumerate(sent.tokens) if t.end == s.end) + 1)
        for s in spans
    )
    assert sorted(decoded) == expected


class TestStripForeignTags:
    def test_keeps_only_target(self):
        plain, spans, _ = extract_spans("<b>Note</b> use <code>x</code> and <i>y</i>")
        sents = split_sentences(plain, spans)
        stripped = strip_foreign_tags(sents[0], FormatType.CODE)
        assert [s.format for s in stripped.spans] == [FormatType.CODE]
        assert stripped.tokens == sents[0].tokens

    def test_only_target_spans_unchanged(self):
        span = HighlightSpan(FormatType.ITALIC, 0, 4, "only")
        sent = sentence_from_text("only italics", [span])
        assert strip_foreign_tags(sent, FormatType.ITALIC) is sent

    def test_three_types_to_italic(self):
        spans = [
            HighlightSpan(FormatType.BOLD, 0, 1, "a"),
            HighlightSpan(FormatType.ITALIC, 2, 3, "b"),
            HighlightSpan(FormatType.CODE, 4, 5, "c"),
        ]
        sent = sentence_from_text("a b c", spans)
        stripped = strip_foreign_tags(sent, FormatType.ITALIC)
        assert [s.content for s in stripped.spans] == ["b"]


class TestSplitDataset:
    def test_ratio_arithmetic(self):
        train, test = split_dataset(list(range(10)), 0.8, seed=1)
        assert len(train) == 8 and len(test) == 2

    def test_disjoint_union(self):
        data = list(range(57))
        train, test = split_dataset(data, 0.8, seed=42)
        assert sorted(train + test) == data
        assert not set(train) & set(test)

    def test_same_seed_identical(self):
        data = list(range(40))
        assert split_dataset(data, 0.7, seed=5) == split_dataset(data, 0.7, seed=5)

    def test_too_small_raises(self):
        with pytest.raises(SplitError):
            split_dataset([1], 0.8, seed=0)

    def test_bad_ratio_raises(self):
        with pytest.raises(SplitError):
            split_dataset([1, 2, 3], 1.5, seed=0)


DICT = TagDictionary.from_iterable(["mysql", "django"])

ANSWERS = [
    (1, "Call <code>foo()</code> and <code>mysql</code> today."),
    (2, "Path is <code>/etc/hosts</code> here."),
    (3, "<b>BufferedReader.close()</b> was bold but is code elsewhere."),
    (4, "Use <code>BufferedReader.close()</code> properly."),
    (5, "<b>NOTE:</b> check <i>twice</i> before <code>bar()</code>."),
    (6, "Nothing highlighted at all."),
]


def build(target):
    answers = (parse_answer(RawAnswer(pid, body)) for pid, body in ANSWERS)
    return build_dataset(answers, target, DICT)


class TestBuildDataset:
    def test_code_dataset_drops_misuse(self):
        built = build(FormatType.CODE)
        contents = [
            t for s in built.sentences for t, lab in zip(s.tokens, s.labels) if lab != "O"
        ]
        assert "mysql" not in contents
        assert "/etc/hosts" not in contents
        assert "foo()" in contents
        assert built.report.software_or_terminology == 1
        assert built.report.path == 1

    def test_cross_highlight_removed_from_text_dataset(self):
        # the bold BufferedReader.close() sentence is dropped entirely:
        # its only bold span was cross-highlighted as code
        built = build(FormatType.BOLD)
        assert built.report.cross_highlighted_code_in_text == 1
        bold_contents = [
            t for s in built.sentences for t, lab in zip(s.tokens, s.labels) if lab != "O"
        ]
        assert bold_contents == ["NOTE", ":"]  # colon detaches outside code spans

    def test_every_sentence_has_a_highlight(self):
        for target in (FormatType.CODE, FormatType.BOLD, FormatType.ITALIC):
            built = build(target)
            for s in built.sentences:
                assert any(lab != "O" for lab in s.labels)

    def test_foreign_spans_counted(self):
        built = build(FormatType.ITALIC)
        assert built.report.foreign_tags_stripped >= 2  # bold + code in answer 5

    def test_removed_code_content_does_not_suppress_text_instance(self):
        # cross-check uses the *cleaned* code set: a bold "mysql" must stay
        # in the bold dataset because code-side "mysql" was itself removed.
        answers = [
            (1, "<code>mysql</code> appears as code."),
            (2, "<b>mysql</b> appears as bold."),
        ]
        parsed = (parse_answer(RawAnswer(pid, body)) for pid, body in answers)
        built = build_dataset(parsed, FormatType.BOLD, DICT)
        bold_contents = [
            t for s in built.sentences for t, lab in zip(s.tokens, s.labels) if lab != "O"
        ]
        assert bold_contents == ["mysql"]


class TestLabeledSentenceValidity:
    def test_length_mismatch_rejected(self):
        with pytest.raises(EncodingError):
            LabeledSentence(("a", "b"), ("O",), 1, FormatType.CODE)

    def test_round_trip_dict(self):
        sent = LabeledSentence(("a", "b"), ("B-code", "O"), 7, FormatType.CODE)
        assert LabeledSentence.from_dict(sent.to_dict(), FormatType.CODE) == sent
