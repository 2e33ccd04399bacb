"""Model file format (.hlm).

Layout: magic ``HLMF`` | u32 version | u32 header length | UTF-8 JSON
header (config, seed, array manifest) | the arrays as little-endian
float32, concatenated in manifest order. The float32 storage is exact
for prediction because inference always rounds weights through float32
(see LabelerModel.inference_params).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from hiliter.labeler.model import LabelerConfig, LabelerModel

MAGIC = b"HLMF"
FORMAT_VERSION = 1
FILE_EXTENSION = ".hlm"


class LoadError(ValueError):
    """Bad model file; ``offset`` points at the violating byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def save_model(model: LabelerModel, path: str | Path) -> None:
    for name, value in model.params.items():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"non-finite weights in {name}")
    manifest = [
        {"name": name, "shape": list(shape)}
        for name, shape in model.config.param_shapes()
    ]
    header = json.dumps(
        {
            "config": model.config.to_dict(),
            "seed": model.config.seed,
            "arrays": manifest,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for entry in manifest:
            array = model.params[entry["name"]]
            fh.write(array.astype("<f4").tobytes(order="C"))


def _read_header(data: bytes) -> tuple[dict, int]:
    if len(data) < 4 or data[:4] != MAGIC:
        raise LoadError("not a model file (bad magic)", 0)
    if len(data) < 8:
        raise LoadError("truncated before version field", len(data))
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise LoadError(f"unsupported format version {version}", 4)
    if len(data) < 12:
        raise LoadError("truncated before header length", len(data))
    (header_len,) = struct.unpack_from("<I", data, 8)
    if len(data) < 12 + header_len:
        raise LoadError("truncated inside header", len(data))
    try:
        header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise LoadError(f"corrupt header: {exc}", 12) from exc
    return header, 12 + header_len


def load_model(path: str | Path) -> LabelerModel:
    data = Path(path).read_bytes()
    header, offset = _read_header(data)
    config = LabelerConfig.from_dict(header["config"])
    params: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if len(data) < offset + nbytes:
            raise LoadError(f"truncated inside array {entry['name']}", len(data))
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        params[entry["name"]] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise LoadError("trailing bytes after last array", offset)
    expected = [name for name, _ in config.param_shapes()]
    if sorted(params) != sorted(expected):
        raise LoadError("array manifest does not match config", 12)
    return LabelerModel(config, params)


def read_model_info(path: str | Path) -> dict:
    """Header-only metadata for model listings; cheap, no array reads."""
    with open(path, "rb") as fh:
        prefix = fh.read(12)
        if len(prefix) < 12:
            raise LoadError("truncated before header", len(prefix))
        header_len = struct.unpack("<I", prefix[8:12])[0]
        data = prefix + fh.read(header_len)
    header, _ = _read_header(data)
    config = header["config"]
    return {
        "format": config["format"],
        "file_version": struct.unpack_from("<I", data, 4)[0],
        "seed": header["seed"],
        "config": {
            "embed_dim": config["embed_dim"],
            "n_layers": config["n_layers"],
            "window": config["window"],
            "maxout_pieces": config["maxout_pieces"],
            "table_rows": config["table_rows"],
        },
    }
