"""Binary checkpoints.

Layout: the 8-byte magic ``KGCTCKPT``, a little-endian uint32 header
length, a UTF-8 JSON header, then every array listed in the header as
little-endian float64 in row-major order. The header carries the format
version, model kind, ``d``, ``|E|``, ``|R|`` and the vocabulary digest.
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .model import ModelParams
from .optim import AdagradState

MAGIC = b"KGCTCKPT"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    params: ModelParams
    vocab_digest: str
    optimizer: AdagradState | None = None
    config: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def save_checkpoint(path, ckpt):
    p = ckpt.params
    arrays = [("entity", p.entity), ("relation", p.relation)]
    opt = None
    if ckpt.optimizer is not None:
        opt = {"learning_rate": ckpt.optimizer.learning_rate, "epsilon": ckpt.optimizer.epsilon}
        arrays += [(f"adagrad.{k}", v) for k, v in sorted(ckpt.optimizer.accumulators.items())]
    header = {
        "format_version": FORMAT_VERSION,
        "kind": p.kind,
        "dim": p.dim,
        "n_entities": p.n_entities,
        "n_relations": p.n_relations,
        "vocab_digest": ckpt.vocab_digest,
        "optimizer": opt,
        "config": ckpt.config,
        "meta": ckpt.meta,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)


def read_header(path):
    with open(path, "rb") as f:
        return _read_header(f, path)


def _read_header(f, path):
    if f.read(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    try:
        (n,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(n).decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header ({e})") from None
    if not isinstance(header, dict):
        raise CheckpointError(f"{path}: corrupt header")
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
    return header


def load_checkpoint(path):
    try:
        return _load(path)
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: malformed checkpoint ({e!r})") from None


def _load(path):
    with open(path, "rb") as f:
        header = _read_header(f, path)
        arrays = {}
        for spec in header["arrays"]:
            count = int(np.prod(spec["shape"], dtype=np.int64))
            buf = f.read(8 * count)
            if len(buf) != 8 * count:
                raise CheckpointError(f"{path}: truncated array {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(spec["shape"])
        if f.read(1):
            raise CheckpointError(f"{path}: trailing bytes after the last array")
    params = ModelParams(header["kind"], header["dim"], arrays["entity"], arrays["relation"])
    opt = None
    if header.get("optimizer"):
        acc = {k.split(".", 1)[1]: v for k, v in arrays.items() if k.startswith("adagrad.")}
        opt = AdagradState(header["optimizer"]["learning_rate"], header["optimizer"]["epsilon"], acc)
    return Checkpoint(params, header["vocab_digest"], opt, header.get("config", {}), header.get("meta", {}))
