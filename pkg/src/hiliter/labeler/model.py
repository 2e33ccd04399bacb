"""Network definition: hash embedder, maxout window encoder, softmax head.

Everything is plain numpy. Training math runs in float64; prediction
rounds parameters through float32 first so that results are bit-identical
with a model reloaded from its float32 file form.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from hiliter.markup import FormatType

LABELS = ("O", "B", "I", "E")
_LABEL_INDEX = {name: k for k, name in enumerate(LABELS)}

ATTRIBUTES = ("norm", "prefix", "suffix", "shape")

DEFAULT_TABLE_ROWS = {"norm": 4096, "prefix": 1024, "suffix": 1024, "shape": 512}


def stable_hash(value: str) -> int:
    """Process-independent 64-bit hash of a string."""
    digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def word_shape(token: str) -> str:
    """Character-class skeleton; runs longer than 4 are truncated."""
    out: list[str] = []
    run_char = ""
    run_len = 0
    for ch in token:
        if ch.isupper():
            cls = "X"
        elif ch.islower():
            cls = "x"
        elif ch.isdigit():
            cls = "d"
        else:
            cls = ch
        if cls == run_char:
            run_len += 1
            if run_len > 4:
                continue
        else:
            run_char = cls
            run_len = 1
        out.append(cls)
    return "".join(out)


def token_attributes(token: str) -> dict[str, str]:
    norm = token.lower()
    return {
        "norm": norm,
        "prefix": norm[:3],
        "suffix": norm[-3:],
        "shape": word_shape(token),
    }


def labels_to_indices(labels: Sequence[str]) -> np.ndarray:
    """Map serialized labels ("O", "B-code", ...) to O/B/I/E indices."""
    out = np.empty(len(labels), dtype=np.int64)
    for k, lab in enumerate(labels):
        head = lab.split("-", 1)[0]
        if head not in _LABEL_INDEX:
            raise ValueError(f"bad label {lab!r}")
        out[k] = _LABEL_INDEX[head]
    return out


@dataclass(frozen=True)
class LabelerConfig:
    format: FormatType
    embed_dim: int = 128
    n_layers: int = 4
    window: int = 1
    maxout_pieces: int = 3
    n_labels: int = 4
    table_rows: Mapping[str, int] = field(
        default_factory=lambda: dict(DEFAULT_TABLE_ROWS)
    )
    table_cols: int = 32
    residual: tuple[bool, ...] | None = None
    max_tokens: int = 512
    seed: int = 42

    def residual_flags(self) -> tuple[bool, ...]:
        # Residual connections on every layer but the first keep the
        # stack stable while letting layer 1 reshape the embedding space.
        if self.residual is not None:
            return self.residual
        return tuple(k > 0 for k in range(self.n_layers))

    def to_dict(self) -> dict:
        return {
            "format": self.format.value,
            "embed_dim": self.embed_dim,
            "n_layers": self.n_layers,
            "window": self.window,
            "maxout_pieces": self.maxout_pieces,
            "n_labels": self.n_labels,
            "table_rows": dict(self.table_rows),
            "table_cols": self.table_cols,
            "residual": list(self.residual_flags()),
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LabelerConfig":
        return cls(
            format=FormatType(obj["format"]),
            embed_dim=obj["embed_dim"],
            n_layers=obj["n_layers"],
            window=obj["window"],
            maxout_pieces=obj["maxout_pieces"],
            n_labels=obj["n_labels"],
            table_rows=dict(obj["table_rows"]),
            table_cols=obj["table_cols"],
            residual=tuple(obj["residual"]),
            max_tokens=obj["max_tokens"],
            seed=obj["seed"],
        )

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Parameter names and shapes in fixed (serialization) order."""
        d, c, w, p = self.embed_dim, self.table_cols, self.window, self.maxout_pieces
        shapes: list[tuple[str, tuple[int, ...]]] = []
        for attr in ATTRIBUTES:
            shapes.append((f"table_{attr}", (int(self.table_rows[attr]), c)))
        shapes.append(("proj_w", (len(ATTRIBUTES) * c, d)))
        shapes.append(("proj_b", (d,)))
        for k in range(self.n_layers):
            shapes.append((f"layer{k}_w", ((2 * w + 1) * d, p * d)))
            shapes.append((f"layer{k}_b", (p * d,)))
        shapes.append(("out_w", (d, self.n_labels)))
        shapes.append(("out_b", (self.n_labels,)))
        return shapes


@dataclass(frozen=True)
class PredictedSpan:
    start: int  # token index, inclusive
    end: int  # token index, exclusive
    confidence: float


@dataclass(frozen=True)
class Prediction:
    labels: tuple[str, ...]
    probs: np.ndarray  # n x n_labels, rows sum to 1
    spans: tuple[PredictedSpan, ...]


def decode_spans(labels: Sequence[str]) -> list[tuple[int, int]]:
    """Turn a label sequence into token ranges, repairing invalid runs.

    I or E with no open span is promoted to B; a span still open at an O
    or at the end closes after its last non-O token.
    """
    spans: list[tuple[int, int]] = []
    open_start: int | None = None
    for i, lab in enumerate(labels):
        head = lab.split("-", 1)[0]
        if head == "O":
            if open_start is not None:
                spans.append((open_start, i))
                open_start = None
        elif head == "B":
            if open_start is not None:
                spans.append((open_start, i))
            open_start = i
        elif head == "I":
            if open_start is None:
                open_start = i
        elif head == "E":
            if open_start is None:
                open_start = i
            else:
                spans.append((open_start, i + 1))
                open_start = None
        else:
            raise ValueError(f"bad label {lab!r}")
    if open_start is not None:
        spans.append((open_start, len(labels)))
    return spans


class LabelerModel:
    """A loaded tagger for one format type.

    Immutable once constructed (training mutates a fresh params dict and
    wraps it at the end), so instances are safe to share across threads.
    """

    def __init__(self, config: LabelerConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params
        self._inference_params: dict[str, np.ndarray] | None = None

    @classmethod
    def initialize(cls, config: LabelerConfig) -> "LabelerModel":
        """Glorot-uniform weights, zero biases, seeded by config.seed.

        Embedding tables use their column count for both fans: scaling by
        the row count would shrink lookups toward zero, which is not what
        fan-based initialization is meant to do for lookup tables.
        """
        rng = np.random.default_rng(config.seed)
        params: dict[str, np.ndarray] = {}
        for name, shape in config.param_shapes():
            if name.endswith("_b"):
                params[name] = np.zeros(shape, dtype=np.float64)
                continue
            if name.startswith("table_"):
                fan_in = fan_out = shape[1]
            else:
                fan_in, fan_out = shape[0], shape[1]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=shape)
        return cls(config, params)

    # -- encoding ---------------------------------------------------------

    def encode_tokens(self, tokens: Sequence[str]) -> dict[str, np.ndarray]:
        idx: dict[str, np.ndarray] = {}
        rows = self.config.table_rows
        lists: dict[str, list[int]] = {a: [] for a in ATTRIBUTES}
        for tok in tokens:
            attrs = token_attributes(tok)
            for a in ATTRIBUTES:
                lists[a].append(stable_hash(attrs[a]) % int(rows[a]))
        for a in ATTRIBUTES:
            idx[a] = np.asarray(lists[a], dtype=np.int64)
        return idx

    # -- forward / backward -------------------------------------------------

    def _window_concat(self, x: np.ndarray) -> np.ndarray:
        n, d = x.shape
        w = self.config.window
        padded = np.vstack([np.zeros((w, d)), x, np.zeros((w, d))])
        return np.concatenate([padded[k : k + n] for k in range(2 * w + 1)], axis=1)

    def forward_cached(
        self, idx: dict[str, np.ndarray], params: dict[str, np.ndarray] | None = None
    ) -> tuple[np.ndarray, dict]:
        params = self.params if params is None else params
        cfg = self.config
        n = len(idx[ATTRIBUTES[0]])
        embedded = np.concatenate(
            [params[f"table_{a}"][idx[a]] for a in ATTRIBUTES], axis=1
        )
        x = embedded @ params["proj_w"] + params["proj_b"]
        layers = []
        residual = cfg.residual_flags()
        for k in range(cfg.n_layers):
            context = self._window_concat(x)
            z = context @ params[f"layer{k}_w"] + params[f"layer{k}_b"]
            zr = z.reshape(n, cfg.maxout_pieces, cfg.embed_dim)
            piece = zr.argmax(axis=1)
            pooled = np.take_along_axis(zr, piece[:, None, :], axis=1)[:, 0, :]
            layers.append({"context": context, "piece": piece, "x_in": x})
            x = pooled + x if residual[k] else pooled
        logits = x @ params["out_w"] + params["out_b"]
        shifted = logits - logits.max(axis=1, keepdims=True)
        expz = np.exp(shifted)
        probs = expz / expz.sum(axis=1, keepdims=True)
        cache = {"embedded": embedded, "layers": layers, "x_final": x, "probs": probs}
        return probs, cache

    def forward(self, tokens: Sequence[str]) -> np.ndarray:
        """Probability matrix (n x n_labels) from float64 master weights."""
        if len(tokens) == 0:
            return np.zeros((0, self.config.n_labels))
        probs, _ = self.forward_cached(self.encode_tokens(tokens))
        return probs

    def backward(
        self,
        idx: dict[str, np.ndarray],
        cache: dict,
        dlogits: np.ndarray,
        grads: dict[str, np.ndarray],
    ) -> None:
        """Accumulate parameter gradients given d(loss)/d(logits)."""
        params = self.params
        cfg = self.config
        n, d, w = dlogits.shape[0], cfg.embed_dim, cfg.window
        x_final = cache["x_final"]
        grads["out_w"] += x_final.T @ dlogits
        grads["out_b"] += dlogits.sum(axis=0)
        dx = dlogits @ params["out_w"].T
        residual = cfg.residual_flags()
        for k in reversed(range(cfg.n_layers)):
            layer = cache["layers"][k]
            dzr = np.zeros((n, cfg.maxout_pieces, d))
            np.put_along_axis(dzr, layer["piece"][:, None, :], dx[:, None, :], axis=1)
            dz = dzr.reshape(n, cfg.maxout_pieces * d)
            grads[f"layer{k}_w"] += layer["context"].T @ dz
            grads[f"layer{k}_b"] += dz.sum(axis=0)
            dcontext = dz @ params[f"layer{k}_w"].T
            dpad = np.zeros((n + 2 * w, d))
            for j in range(2 * w + 1):
                dpad[j : j + n] += dcontext[:, j * d : (j + 1) * d]
            dx_in = dpad[w : w + n]
            if residual[k]:
                dx_in = dx_in + dx
            dx = dx_in
        grads["proj_w"] += cache["embedded"].T @ dx
        grads["proj_b"] += dx.sum(axis=0)
        dembedded = dx @ params["proj_w"].T
        c = cfg.table_cols
        for j, a in enumerate(ATTRIBUTES):
            np.add.at(grads[f"table_{a}"], idx[a], dembedded[:, j * c : (j + 1) * c])

    # -- inference ----------------------------------------------------------

    def inference_params(self) -> dict[str, np.ndarray]:
        """Master weights rounded through float32, as stored on disk."""
        if self._inference_params is None:
            self._inference_params = {
                k: v.astype(np.float32).astype(np.float64)
                for k, v in self.params.items()
            }
        return self._inference_params

    def predict(self, tokens: Sequence[str]) -> Prediction:
        """Per-token labels plus decoded spans with mean-probability confidence."""
        if len(tokens) == 0:
            return Prediction(labels=(), probs=np.zeros((0, self.config.n_labels)), spans=())
        probs, _ = self.forward_cached(
            self.encode_tokens(tokens), params=self.inference_params()
        )
        picks = probs.argmax(axis=1)
        suffix = self.config.format.value
        labels = tuple(
            "O" if LABELS[p] == "O" else f"{LABELS[p]}-{suffix}" for p in picks
        )
        spans = tuple(
            PredictedSpan(
                start=a,
                end=b,
                confidence=float(np.mean(probs[np.arange(a, b), picks[a:b]])),
            )
            for a, b in decode_spans(labels)
        )
        return Prediction(labels=labels, probs=probs, spans=spans)
