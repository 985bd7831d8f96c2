"""Versioned binary checkpoints.

Layout (all integers little-endian)::

    b"SPKC" | u16 version | u32 n_sections | sections... | u32 crc32

A section is ``u16 name_len | name | u8 kind | u64 payload_len | payload``
where kind 0 is UTF-8 JSON (sorted keys) and kind 1 is an array:
``u8 dtype_len | dtype str | u8 ndim | u64 * ndim shape | raw bytes``.
The CRC covers every byte before it.  Writing the same state twice gives
identical files.
"""
from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import BigramModel, LabelAssignment
from .config import build, to_document
from .engine import SpikingNetwork
from .errors import CheckpointError
from .harness import Readout, TrainConfig, TrainState

MAGIC = b"SPKC"
VERSION = 1
_JSON, _ARRAY = 0, 1


@dataclass
class Checkpoint:
    meta: dict
    arrays: dict = field(default_factory=dict)
    version: int = VERSION


def _encode_array(a: np.ndarray) -> bytes:
    a = np.ascontiguousarray(a)
    a = a.astype(a.dtype.newbyteorder("<"), copy=False)
    ds = a.dtype.str.encode("ascii")
    return (struct.pack("<B", len(ds)) + ds + struct.pack("<B", a.ndim)
            + struct.pack(f"<{a.ndim}Q", *a.shape) + a.tobytes())


def _decode_array(buf: bytes) -> np.ndarray:
    (n,) = struct.unpack_from("<B", buf, 0)
    dtype = np.dtype(buf[1:1 + n].decode("ascii"))
    (ndim,) = struct.unpack_from("<B", buf, 1 + n)
    off = 2 + n
    shape = struct.unpack_from(f"<{ndim}Q", buf, off)
    off += 8 * ndim
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(buf) - off != expected:
        raise CheckpointError(f"array payload has {len(buf) - off} bytes, expected {expected}")
    return np.frombuffer(buf, dtype=dtype, offset=off).reshape(shape).copy()


def to_bytes(cp: Checkpoint) -> bytes:
    sections = [("meta", _JSON, json.dumps(cp.meta, sort_keys=True, separators=(",", ":")).encode("utf-8"))]
    sections += [(name, _ARRAY, _encode_array(arr)) for name, arr in sorted(cp.arrays.items())]
    out = bytearray(MAGIC + struct.pack("<HI", cp.version, len(sections)))
    for name, kind, payload in sections:
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb)) + nb + struct.pack("<BQ", kind, len(payload)) + payload
    out += struct.pack("<I", zlib.crc32(out))
    return bytes(out)


def from_bytes(buf: bytes) -> Checkpoint:
    if len(buf) < 14 or buf[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic or too short)")
    (crc,) = struct.unpack("<I", buf[-4:])
    if zlib.crc32(buf[:-4]) != crc:
        raise CheckpointError("checksum mismatch: file is truncated or corrupt")
    version, n = struct.unpack_from("<HI", buf, 4)
    if version != VERSION:
        raise CheckpointError(f"checkpoint format version {version} is not supported (this build reads {VERSION})")
    off, meta, arrays = 10, None, {}
    end = len(buf) - 4
    try:
        for _ in range(n):
            (ln,) = struct.unpack_from("<H", buf, off)
            name = buf[off + 2:off + 2 + ln].decode("utf-8")
            off += 2 + ln
            kind, size = struct.unpack_from("<BQ", buf, off)
            off += 9
            payload = buf[off:off + size]
            off += size
            if off > end:
                raise CheckpointError(f"section {name!r} runs past the end of the file")
            if kind == _JSON:
                meta = json.loads(payload.decode("utf-8"))
            elif kind == _ARRAY:
                arrays[name] = _decode_array(payload)
            else:
                raise CheckpointError(f"section {name!r} has unknown kind {kind}")
    except struct.error as e:
        raise CheckpointError(f"malformed section table: {e}") from None
    if off != end or meta is None:
        raise CheckpointError("malformed checkpoint: section table does not match file size")
    return Checkpoint(meta, arrays, version)


def save_checkpoint(path, cp: Checkpoint) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(to_bytes(cp))
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())


# --- network <-> checkpoint ----------------------------------------------------


def capture(net: SpikingNetwork, cfg: TrainConfig, state: TrainState | None = None,
            readout: Readout | None = None) -> Checkpoint:
    """Snapshot everything needed to resume training or re-run evaluation."""
    state = state or TrainState()
    meta = {
        "config": to_document(net.spec, cfg),
        "seed": net.seed,
        "state": {"stage": state.stage, "iteration": state.iteration,
                  "retries": state.retries, "flagged": state.flagged},
        "lambda": net.encoder.lam,
        "w_p": net.w_p,
        "frozen": [bool(layer.proj.frozen) for layer in net.layers],
    }
    arrays = {}
    for i, layer in enumerate(net.layers):
        arrays[f"stage{i}.weights"] = layer.weights
        arrays[f"stage{i}.mask"] = layer.mask
        arrays[f"stage{i}.theta"] = layer.theta
        arrays[f"stage{i}.alive"] = layer.alive
    if readout is not None:
        arrays["readout.response"] = readout.labels.response_matrix
        if readout.bigram is not None:
            pairs, table = readout.bigram.to_arrays()
            arrays["bigram.pairs"], arrays["bigram.table"] = pairs, table
    return Checkpoint(meta, arrays)


def restore(cp: Checkpoint) -> tuple:
    """Rebuild ``(network, TrainConfig, TrainState, Readout | None)``."""
    spec, cfg = build(cp.meta["config"])
    net = SpikingNetwork(spec, cfg.sim, cp.meta["seed"])
    try:
        for i, layer in enumerate(net.layers):
            layer.proj.weights = np.ascontiguousarray(cp.arrays[f"stage{i}.weights"], dtype=np.float64)
            layer.proj.mask = cp.arrays[f"stage{i}.mask"].astype(bool)
            layer.theta = cp.arrays[f"stage{i}.theta"].astype(np.float64)
            layer.alive = cp.arrays[f"stage{i}.alive"].astype(bool)
            layer.proj.frozen = cp.meta["frozen"][i]
            layer.refresh()
            layer.rest()
    except KeyError as e:
        raise CheckpointError(f"checkpoint lacks array {e}") from None
    net.encoder.lam = cp.meta["lambda"]
    net.w_p = list(cp.meta["w_p"])
    for s, pl in enumerate(net.pra_layers):
        if pl is not None:
            pl.set_pool_weight(net.w_p[s])
    state = TrainState(**cp.meta["state"])
    readout = None
    if "readout.response" in cp.arrays:
        R = cp.arrays["readout.response"]
        la = LabelAssignment(R, R.argmax(axis=1), R.sum(axis=1) == 0, np.arange(R.shape[1]))
        bigram = None
        if "bigram.pairs" in cp.arrays:
            bigram = BigramModel.from_arrays(cp.arrays["bigram.pairs"], cp.arrays["bigram.table"])
        readout = Readout(la, bigram)
    return net, cfg, state, readout
