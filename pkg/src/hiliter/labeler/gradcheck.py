"""Finite-difference validation of the analytic gradients.

Central differences with a magnitude-scaled step; parameters whose
perturbation flips a maxout argmax are skipped (the loss has a kink
there, so the comparison is meaningless). Relative errors use a 1e-6
denominator floor: below that scale the difference quotient is noise.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from hiliter.labeler.model import LabelerConfig, LabelerModel, labels_to_indices


def _loss(model: LabelerModel, idx, y) -> tuple[float, dict]:
    probs, cache = model.forward_cached(idx)
    n = len(y)
    nll = float(-np.log(probs[np.arange(n), y]).sum()) / n
    return nll, cache


def _piece_pattern(cache: dict) -> tuple:
    return tuple(layer["piece"].tobytes() for layer in cache["layers"])


def gradient_check(
    config: LabelerConfig,
    tokens: Sequence[str],
    labels: Sequence[str],
    n_samples: int = 200,
    seed: int = 0,
    h: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    model = LabelerModel.initialize(config)
    idx = model.encode_tokens(tokens)
    y = labels_to_indices(labels)
    n = len(y)

    base_loss, cache = _loss(model, idx, y)
    base_pattern = _piece_pattern(cache)
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    dlogits = cache["probs"].copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    model.backward(idx, cache, dlogits, grads)

    coords: list[tuple[str, int]] = []
    for name, value in sorted(model.params.items()):
        coords.extend((name, flat) for flat in range(value.size))
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(coords), size=min(n_samples, len(coords)), replace=False)

    worst = 0.0
    for coord in picked:
        name, flat = coords[coord]
        param = model.params[name]
        original = param.flat[flat]
        step = h * max(1.0, abs(original))

        param.flat[flat] = original + step
        loss_plus, cache_plus = _loss(model, idx, y)
        param.flat[flat] = original - step
        loss_minus, cache_minus = _loss(model, idx, y)
        param.flat[flat] = original

        if (
            _piece_pattern(cache_plus) != base_pattern
            or _piece_pattern(cache_minus) != base_pattern
        ):
            continue  # near a maxout tie
        fd = (loss_plus - loss_minus) / (2.0 * step)
        analytic = grads[name].flat[flat]
        denom = max(abs(fd), abs(analytic), 1e-6)
        worst = max(worst, abs(fd - analytic) / denom)
    return worst
