from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def parser_corpus() -> list[dict]:
    with open(FIXTURES / "parser_corpus.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def overfit_code_model():
    """A small code model overfit on the synthetic corpus; session-wide."""
    from hiliter.labeler import LabelerConfig, TrainingParams, train
    from hiliter.markup import FormatType

    from synth import make_code_corpus

    corpus = make_code_corpus(150, seed=7)
    config = LabelerConfig(
        format=FormatType.CODE,
        embed_dim=32,
        n_layers=2,
        table_rows={"norm": 256, "prefix": 128, "suffix": 128, "shape": 64},
        seed=7,
    )
    model, _log = train(corpus, config, TrainingParams(epochs=8, seed=7))
    return model
