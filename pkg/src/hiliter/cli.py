"""Command-line entry points."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from hiliter import ingest
from hiliter.dataset import (
    LabeledSentence,
    TagDictionary,
    build_dataset,
    split_dataset,
)
from hiliter.evaluator import (
    categorize_failures,
    count_partial_match,
    frequency_analysis,
    micro_metrics,
)
from hiliter.dataset import highlighted_word_frequencies
from hiliter.labeler import (
    LabelerConfig,
    TrainingParams,
    decode_spans,
    load_model,
    save_model,
    train as train_model,
)
from hiliter.markup import FormatType, parse_answer
from hiliter.recommend import (
    ResolutionPolicy,
    load_model_dir,
    render_markdown,
    resolve_conflicts,
    suggest_all,
)
from hiliter.stats import StatsAccumulator, compute_answer_stats, export_distributions_csv

_TYPE_CHOICES = ["code", "bold", "italic", "heading"]


@click.group()
def main() -> None:
    """Mine, model, and recommend highlight markup in Q&A answers."""


@main.command("parse")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def parse_cmd(input_path: str, out_path: str) -> None:
    """Parse answers (Posts XML or JSON Lines) into ParsedAnswer JSON Lines."""
    with open(out_path, "w", encoding="utf-8") as fh:
        n = ingest.write_parsed_jsonl(
            (parse_answer(raw) for raw in ingest.read_answers(input_path)), fh
        )
    click.echo(f"parsed {n} answers -> {out_path}")


@main.command("stats")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--csv", "csv_dir", default=None, type=click.Path())
def stats_cmd(input_path: str, report_path: str, csv_dir: str | None) -> None:
    """Compute corpus prevalence/instance statistics."""
    acc = StatsAccumulator()
    for raw in ingest.read_answers(input_path):
        acc.add(compute_answer_stats(parse_answer(raw)))
    report = acc.report()
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if csv_dir:
        for path in export_distributions_csv(acc, csv_dir):
            click.echo(f"wrote {path}")
    click.echo(
        f"{report['n_answers']} answers, "
        f"{report['n_highlighted_answers']} highlighted -> {report_path}"
    )


@main.command("build-dataset")
@click.option("--type", "type_name", required=True, type=click.Choice(_TYPE_CHOICES))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--tags-dict", "tags_path", default=None, type=click.Path(exists=True))
@click.option("--split", "ratio", default=0.8, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--fuzzy-threshold", default=90.0, show_default=True)
@click.option("--out-train", required=True, type=click.Path())
@click.option("--out-test", required=True, type=click.Path())
@click.option("--clean-report", "report_path", default=None, type=click.Path())
def build_dataset_cmd(
    type_name: str,
    input_path: str,
    tags_path: str | None,
    ratio: float,
    seed: int,
    fuzzy_threshold: float,
    out_train: str,
    out_test: str,
    report_path: str | None,
) -> None:
    """Clean and encode one format type's BIOE dataset, then split."""
    target = FormatType(type_name)
    dictionary = TagDictionary.load(tags_path) if tags_path else None
    answers = (parse_answer(raw) for raw in ingest.read_answers(input_path))
    built = build_dataset(answers, target, dictionary, fuzzy_threshold, seed)
    train_rows, test_rows = split_dataset(built.sentences, ratio, seed)
    ingest.write_dataset_jsonl((s.to_dict() for s in train_rows), out_train)
    ingest.write_dataset_jsonl((s.to_dict() for s in test_rows), out_test)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(
                {"removed": built.report.to_dict(), "seed": seed, "split": ratio},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
    click.echo(f"{len(train_rows)} train / {len(test_rows)} test sentences")


@main.command("train")
@click.option("--type", "type_name", required=True, type=click.Choice(_TYPE_CHOICES))
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=3, show_default=True)
@click.option("--lr", default=0.001, show_default=True)
@click.option("--batch", default=32, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--embed-dim", default=128, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def train_cmd(
    type_name: str,
    train_path: str,
    epochs: int,
    lr: float,
    batch: int,
    seed: int,
    embed_dim: int,
    out_path: str,
) -> None:
    """Train a tagger for one format type."""
    fmt = FormatType(type_name)
    rows = ingest.read_dataset_jsonl(train_path)
    sentences = [LabeledSentence.from_dict(r, fmt) for r in rows]
    config = LabelerConfig(format=fmt, embed_dim=embed_dim, seed=seed)
    params = TrainingParams(
        epochs=epochs, learning_rate=lr, batch_size=batch, seed=seed
    )
    model, log = train_model(sentences, config, params)
    save_model(model, out_path)
    for warning in log.warnings:
        click.echo(f"warning: {warning}", err=True)
    losses = ", ".join(f"{x:.4f}" for x in log.epoch_losses)
    click.echo(f"trained on {log.n_sentences} sentences; epoch losses: {losses}")
    click.echo(f"saved {out_path}")


def _gold_and_predicted(model, rows):
    gold, predicted, n_tokens, tokens_list = [], [], [], []
    for row in rows:
        tokens = row["tokens"]
        gold.append([tuple(s) for s in decode_spans(row["labels"])])
        predicted.append(
            [(s.start, s.end) for s in model.predict(tokens).spans]
        )
        n_tokens.append(len(tokens))
        tokens_list.append(tokens)
    return gold, predicted, n_tokens, tokens_list


@main.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
def evaluate_cmd(model_path: str, test_path: str, report_path: str) -> None:
    """Partial-match precision/recall/F1 of a model on a test set."""
    model = load_model(model_path)
    rows = ingest.read_dataset_jsonl(test_path)
    gold, predicted, n_tokens, _ = _gold_and_predicted(model, rows)
    counts = [
        count_partial_match(p, g, n) for p, g, n in zip(predicted, gold, n_tokens)
    ]
    report = micro_metrics(counts)
    payload = {
        "format": model.config.format.value,
        "n_sentences": len(rows),
        **report.to_dict(),
    }
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(
        f"P {report.precision:.3f} R {report.recall:.3f} F1 {report.f1:.3f}"
        f" -> {report_path}"
    )


@main.command("analyze-failures")
@click.option("--target", required=True, type=click.Choice(_TYPE_CHOICES))
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--train", "train_path", default=None, type=click.Path(exists=True))
@click.option("--freq-csv", "freq_csv", default=None, type=click.Path())
def analyze_failures_cmd(
    target: str,
    models_dir: str,
    test_path: str,
    out_path: str,
    train_path: str | None,
    freq_csv: str | None,
) -> None:
    """Failure-family breakdown, optionally with word-frequency analysis."""
    fmt = FormatType(target)
    models = load_model_dir(models_dir)
    if fmt not in models:
        raise click.ClickException(f"no {target} model in {models_dir}")
    rows = ingest.read_dataset_jsonl(test_path)
    gold, predicted, n_tokens, tokens_list = _gold_and_predicted(models[fmt], rows)
    siblings = {}
    for other_fmt, other in sorted(models.items(), key=lambda kv: kv[0].value):
        if other_fmt is fmt:
            continue
        siblings[other_fmt.value] = [
            [(s.start, s.end) for s in other.predict(row["tokens"]).spans]
            for row in rows
        ]
    breakdown = categorize_failures(gold, predicted, siblings, n_tokens)
    payload = {"target": target, "failures": breakdown.to_dict()}
    if train_path:
        freq = highlighted_word_frequencies(ingest.read_dataset_jsonl(train_path))
        sentences = []
        for toks, g, p in zip(tokens_list, gold, predicted):
            gold_set = {t for a, b in g for t in range(a, b)}
            pred_set = {t for a, b in p for t in range(a, b)}
            sentences.append((toks, gold_set, pred_set))
        freq_report = frequency_analysis(freq, sentences)
        payload["frequencies"] = freq_report.to_dict()
        if freq_csv:
            with open(freq_csv, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["partition", "frequency"])
                writer.writerows(
                    ("correct", f) for f in freq_report.correct_frequencies
                )
                writer.writerows(("missed", f) for f in freq_report.missed_frequencies)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"failure breakdown -> {out_path}")


@main.command("suggest")
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option(
    "--mode", default="json", show_default=True, type=click.Choice(["apply", "json"])
)
@click.option(
    "--policy", default="highest", show_default=True, type=click.Choice(["highest", "all"])
)
def suggest_cmd(models_dir: str, input_path: str, mode: str, policy: str) -> None:
    """Suggest highlights for a draft; print JSON or the rewritten draft."""
    from hiliter.service import suggest_payload

    models = load_model_dir(models_dir)
    if not models:
        raise click.ClickException(f"no models found in {models_dir}")
    draft = Path(input_path).read_text(encoding="utf-8")
    resolution = ResolutionPolicy(
        mode="highest_confidence" if policy == "highest" else "all_with_scores"
    )
    if mode == "json":
        payload = suggest_payload(draft, models, resolution)
        sys.stdout.write(ingest.canonical_json(payload))
        sys.stdout.flush()
        return
    suggestions, _warnings = suggest_all(draft, models)
    resolved = resolve_conflicts(suggestions, ResolutionPolicy())
    click.echo(render_markdown(draft, resolved), nl=False)


@main.command("serve")
@click.option("--models", "models_dir", default=None, type=click.Path(exists=True))
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static", "static_dir", default=None, type=click.Path(exists=True))
@click.option("--max-inflight", default=32, show_default=True)
def serve_cmd(
    models_dir: str | None,
    port: int,
    host: str,
    static_dir: str | None,
    max_inflight: int,
) -> None:
    """Run the suggestion service (HILITER_MODEL_DIR is the --models fallback)."""
    import uvicorn

    from hiliter.service import create_app

    app = create_app(models_dir, static_dir, max_inflight=max_inflight)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
