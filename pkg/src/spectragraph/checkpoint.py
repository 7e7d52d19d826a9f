"""Binary checkpoints of parameter blocks and pruning masks.

Layout (all integers little-endian)::

    magic        4 bytes  b"SGCK"
    version      u8
    digest       32 bytes SHA-256 of the canonical model description
    n_blocks     u32
    header_crc   u32      CRC-32 of the block descriptors
    descriptors  per block: u16 name length, UTF-8 name, u8 ndim,
                 ndim x u32 dims, u8 has_mask
    payload      per block: float64 values (C order); then per masked
                 block: 1 bit per weight, LSB first, padded to a byte
    payload_crc  u32      CRC-32 of the payload
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .nn.models import ModelSpec
from .report import atomic_write_bytes

MAGIC = b"SGCK"
VERSION = 1


class CheckpointError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"checkpoint {field}: {message}")
        self.field = field


@dataclass
class Checkpoint:
    version: int
    digest: bytes
    params: dict
    masks: dict


def _descriptors(names, params, masks) -> bytes:
    out = bytearray()
    for name in names:
        raw = name.encode()
        shape = params[name].shape
        out += struct.pack("<H", len(raw)) + raw + struct.pack("<B", len(shape))
        out += struct.pack(f"<{len(shape)}I", *shape)
        out += struct.pack("<B", 1 if name in masks else 0)
    return bytes(out)


def encode_checkpoint(spec: ModelSpec, params: dict, masks: dict | None = None) -> bytes:
    masks = masks or {}
    names = [n for n in spec.param_shapes() if n in params] + \
        sorted(n for n in params if n not in spec.param_shapes())
    desc = _descriptors(names, params, masks)
    payload = bytearray()
    for name in names:
        payload += np.ascontiguousarray(params[name], dtype="<f8").tobytes()
    for name in names:
        if name in masks:
            m = np.asarray(masks[name], dtype=bool)
            if m.shape != params[name].shape:
                raise ValueError(f"mask {name} shape {m.shape} != {params[name].shape}")
            payload += np.packbits(m.ravel(), bitorder="little").tobytes()
    head = MAGIC + struct.pack("<B", VERSION) + spec.digest() + \
        struct.pack("<II", len(names), zlib.crc32(desc))
    return head + desc + bytes(payload) + struct.pack("<I", zlib.crc32(payload))


def save_checkpoint(path, spec: ModelSpec, params: dict, masks: dict | None = None) -> None:
    """Write atomically (temporary file, then rename)."""
    atomic_write_bytes(path, encode_checkpoint(spec, params, masks))


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int, field: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(field, "file truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, field: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), field))


def decode_checkpoint(data: bytes, spec: ModelSpec | None = None) -> Checkpoint:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise CheckpointError("magic", "not a checkpoint file")
    (version,) = r.unpack("<B", "version")
    if version != VERSION:
        raise CheckpointError("version", f"unsupported version {version} (expected {VERSION})")
    digest = r.take(32, "digest")
    if spec is not None and digest != spec.digest():
        raise CheckpointError("digest", "model description does not match the checkpoint")
    n_blocks, header_crc = r.unpack("<II", "n_blocks")
    desc_start = r.pos
    blocks = []
    for i in range(n_blocks):
        (name_len,) = r.unpack("<H", f"block {i} name length")
        try:
            name = r.take(name_len, f"block {i} name").decode()
        except UnicodeDecodeError:
            raise CheckpointError(f"block {i} name", "not valid UTF-8") from None
        (ndim,) = r.unpack("<B", f"block {i} ndim")
        shape = r.unpack(f"<{ndim}I", f"block {i} dims")
        (has_mask,) = r.unpack("<B", f"block {i} mask flag")
        blocks.append((name, tuple(shape), bool(has_mask)))
    if zlib.crc32(data[desc_start:r.pos]) != header_crc:
        raise CheckpointError("header_crc", "block descriptors are corrupt")

    payload_start = r.pos
    params, masks = {}, {}
    for name, shape, _ in blocks:
        size = math.prod(shape)
        raw = r.take(8 * size, f"block {name!r} values")
        params[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    for name, shape, has_mask in blocks:
        if has_mask:
            size = math.prod(shape)
            raw = r.take((size + 7) // 8, f"block {name!r} mask")
            bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:size]
            masks[name] = bits.astype(bool).reshape(shape)
    payload_end = r.pos
    (payload_crc,) = r.unpack("<I", "payload_crc")
    if r.pos != len(data):
        raise CheckpointError("payload_crc", "trailing bytes after checkpoint")
    if zlib.crc32(data[payload_start:payload_end]) != payload_crc:
        raise CheckpointError("payload_crc", "parameter data are corrupt")
    if spec is not None:
        for name, shape in spec.param_shapes().items():
            if name not in params:
                raise CheckpointError(f"block {name!r}", "missing")
            if params[name].shape != shape:
                raise CheckpointError(f"block {name!r}", f"shape {params[name].shape} != {shape}")
    return Checkpoint(version, digest, params, masks)


def load_checkpoint(path, spec: ModelSpec | None = None) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read(), spec)
