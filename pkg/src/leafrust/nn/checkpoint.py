"""Checkpoint container: versioned magic, JSON header, raw tensor bytes.

The format is deliberately dumb so that saving, loading, and saving again
produces byte-identical files: the header is canonical JSON (sorted keys,
fixed separators) and tensors are concatenated little-endian buffers in
manifest order. Nothing in the file depends on wall-clock time.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .model import ConvNet, ModelConfig

MAGIC = b"LFRN0001"


class CheckpointError(ValueError):
    """Malformed, truncated, or foreign checkpoint file."""


@dataclasses.dataclass(repr=False)
class Checkpoint:
    config: ModelConfig
    tensors: dict
    seed: int | None = None
    meta: dict = dataclasses.field(default_factory=dict)

    def __repr__(self):
        names = ", ".join(self.tensors)
        return (
            f"Checkpoint(config={self.config!r}, seed={self.seed!r}, "
            f"meta={self.meta!r}, tensors=[{names}])"
        )


def _canonical_dtype(dtype) -> str:
    dt = np.dtype(dtype)
    if dt.byteorder == ">":
        raise CheckpointError("big-endian tensors are not supported")
    return dt.newbyteorder("<").str


def save_checkpoint(path, config: ModelConfig, tensors: dict,
                    seed=None, meta=None) -> None:
    manifest = []
    payloads = []
    for name, array in tensors.items():
        array = np.ascontiguousarray(array)
        dtype = _canonical_dtype(array.dtype)
        manifest.append(
            {"name": name, "dtype": dtype, "shape": list(array.shape)}
        )
        payloads.append(array.astype(dtype, copy=False).tobytes())
    header = {
        "config": dataclasses.asdict(config),
        "seed": None if seed is None else int(seed),
        "meta": dict(meta) if meta else {},
        "tensors": manifest,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", len(blob)))
        handle.write(blob)
        for payload in payloads:
            handle.write(payload)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a recognized checkpoint file")
    (header_len,) = struct.unpack_from("<I", data, len(MAGIC))
    header_start = len(MAGIC) + 4
    header_end = header_start + header_len
    if header_end > len(data):
        raise CheckpointError(f"{path} is truncated inside the header")
    try:
        header = json.loads(data[header_start:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path} has a corrupt header: {exc}") from exc

    try:
        config_fields = dict(header["config"])
        config_fields["dense_widths"] = tuple(config_fields["dense_widths"])
        config = ModelConfig(**config_fields)
        manifest = header["tensors"]
        seed = header.get("seed")
        meta = header.get("meta", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path} has an invalid header: {exc}") from exc

    tensors = {}
    cursor = header_end
    for entry in manifest:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(int(s) for s in entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if cursor + nbytes > len(data):
            raise CheckpointError(
                f"{path} is truncated: tensor '{entry['name']}' needs "
                f"{nbytes} bytes, {len(data) - cursor} remain"
            )
        array = np.frombuffer(data, dtype=dtype, count=int(np.prod(shape, dtype=np.int64)),
                              offset=cursor).reshape(shape).copy()
        tensors[entry["name"]] = array
        cursor += nbytes
    if cursor != len(data):
        raise CheckpointError(
            f"{path} has {len(data) - cursor} unexpected trailing byte(s)"
        )
    return Checkpoint(config=config, tensors=tensors, seed=seed, meta=meta)


def save_model(path, net: ConvNet, seed=None, meta=None) -> None:
    save_checkpoint(path, net.config, net.state_dict(), seed=seed, meta=meta)


def load_model(path) -> tuple[ConvNet, Checkpoint]:
    """Rebuild a network from a checkpoint; weights match bit for bit."""
    ckpt = load_checkpoint(path)
    net = ConvNet(ckpt.config, seed=0)
    net.load_state(ckpt.tensors)
    return net, ckpt
