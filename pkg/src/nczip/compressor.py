"""Whole-file compression with the neural model driving the range coder.

Container layout (multi-byte integers little-endian)::

    b"NCZ1"   magic
    u8        format version (1)
    u8        flags; bit 0 = POS channel enabled
    u32       CRC-32 checksum of the model file the stream was coded with
    varint    original length in bytes (unsigned LEB128)
    ...       range coder payload

The model file is not embedded; decompression needs the same model.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coder import (
    MAX_TOTAL,
    BitReader,
    CorruptStreamError,
    QuantizedPmf,
    RangeDecoder,
    RangeEncoder,
    quantize_pmf,
)
from .model import NetworkParams, forward, params_to_bytes
from .tagging import IncrementalTags, default_tagger
from .training import WindowSample

__all__ = [
    "ContainerHeader",
    "ContainerError",
    "BadMagicError",
    "UnsupportedVersionError",
    "ModelMismatchError",
    "CorruptStreamError",
    "CompressionStats",
    "ContextModel",
    "Order0Model",
    "compress",
    "compress_with_stats",
    "decompress",
    "evaluate_bpc",
    "baseline_order0",
    "coding_windows",
]

MAGIC = b"NCZ1"
VERSION = 1
FLAG_POS = 0x01


class ContainerError(ValueError):
    pass


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class ModelMismatchError(ContainerError):
    """The container was written with a different model file."""


def _write_varint(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    value = shift = 0
    while True:
        if pos >= len(data):
            raise CorruptStreamError("container header truncated")
        b = data[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise CorruptStreamError("length field too long")


@dataclass(frozen=True)
class ContainerHeader:
    flags: int
    model_checksum: int
    length: int
    version: int = VERSION

    @property
    def pos_enabled(self) -> bool:
        return bool(self.flags & FLAG_POS)

    def to_bytes(self) -> bytes:
        return MAGIC + struct.pack("<BBI", self.version, self.flags, self.model_checksum) + _write_varint(self.length)

    @classmethod
    def parse(cls, data: bytes) -> tuple["ContainerHeader", int]:
        """Returns the header and the payload offset."""
        if len(data) < 4 or data[:4] != MAGIC:
            raise BadMagicError(f"not an NCZ1 container (magic {bytes(data[:4])!r})")
        if len(data) < 10:
            raise CorruptStreamError("container header truncated")
        version, flags, checksum = struct.unpack_from("<BBI", data, 4)
        if version != VERSION:
            raise UnsupportedVersionError(f"unsupported container version {version}")
        length, pos = _read_varint(data, 10)
        return cls(flags, checksum, length, version), pos


@dataclass
class CompressionStats:
    """Sizes and rates of one coding run.

    ``bpc`` is the realized payload rate (coder bits / input bytes, container
    header excluded); ``ideal_bpc`` is the mean of -log2 p over the quantized
    pmfs. ``bpc_with_model`` charges the serialized model to the text as well.
    """

    input_bytes: int
    output_bytes: int | None
    bpc: float
    ideal_bpc: float
    payload_bits: int | None = None
    ideal_bits: float = 0.0
    model_bytes: int = 0

    @property
    def bpc_with_model(self) -> float:
        if not self.input_bytes:
            return 0.0
        bits = self.payload_bits if self.payload_bits is not None else self.ideal_bits
        return (bits + 8 * self.model_bytes) / self.input_bytes

    def line(self) -> str:
        out = "-" if self.output_bytes is None else str(self.output_bytes)
        return (
            f"input_bytes={self.input_bytes} output_bytes={out} bpc={self.bpc:.4f} "
            f"ideal_bpc={self.ideal_bpc:.4f} bpc_with_model={self.bpc_with_model:.4f}"
        )


class ContextModel:
    """Next-byte predictor shared by encoder and decoder.

    The context for position ``i`` is the preceding ``window`` bytes, left
    padded with byte 0, and the matching slice of the causal tag stream
    (padded with tag 0). Both sides feed it the same bytes, so both see the
    same sequence of quantized pmfs.
    """

    def __init__(self, params: NetworkParams, tagger: Callable[[str], int] | None, use_pos: bool):
        self.params = params
        self.window = params.config.window
        self.use_pos = use_pos
        self.tags = IncrementalTags(tagger) if use_pos else None
        self.history = bytearray(self.window)

    def context(self) -> tuple[bytes, list[int] | None]:
        ctx = bytes(self.history[-self.window :])
        tags = self.tags.last(self.window) if self.use_pos else None
        return ctx, tags

    def next_pmf(self) -> QuantizedPmf:
        ctx, tags = self.context()
        return quantize_pmf(forward(self.params, ctx, tags))

    def push(self, b: int):
        self.history.append(b)
        del self.history[0]
        if self.tags is not None:
            self.tags.append(b)


def _resolve_tagger(tagger, use_pos):
    if use_pos and tagger is None:
        return default_tagger()
    return tagger


def _run(text: bytes, params: NetworkParams, tagger, use_pos: bool, encode: bool, record: list | None):
    model = ContextModel(params, _resolve_tagger(tagger, use_pos), use_pos)
    enc = RangeEncoder() if encode else None
    ideal = 0.0
    for b in text:
        pmf = model.next_pmf()
        if record is not None:
            record.append(pmf.freqs)
        ideal += pmf.code_length(b)
        if enc is not None:
            enc.encode(pmf, b)
        model.push(b)
    payload = enc.finish() if enc is not None else None
    bits = enc.sink.bits_written if enc is not None else None
    return payload, bits, ideal


def compress_with_stats(
    text: bytes,
    params: NetworkParams,
    tagger: Callable[[str], int] | None = None,
    *,
    use_pos: bool = True,
    record: list | None = None,
) -> tuple[bytes, CompressionStats]:
    text = bytes(text)
    header = ContainerHeader(FLAG_POS if use_pos else 0, params.checksum(), len(text))
    payload, bits, ideal = _run(text, params, tagger, use_pos, True, record)
    blob = header.to_bytes() + payload
    n = len(text)
    stats = CompressionStats(
        input_bytes=n,
        output_bytes=len(blob),
        bpc=bits / n if n else 0.0,
        ideal_bpc=ideal / n if n else 0.0,
        payload_bits=bits,
        ideal_bits=ideal,
        model_bytes=len(params_to_bytes(params)),
    )
    return blob, stats


def compress(text: bytes, params: NetworkParams, tagger=None, *, use_pos: bool = True, record: list | None = None) -> bytes:
    """Compress ``text``; ``record`` (if a list) receives every quantized frequency vector."""
    return compress_with_stats(text, params, tagger, use_pos=use_pos, record=record)[0]


def decompress(blob: bytes, params: NetworkParams, tagger=None, *, record: list | None = None) -> bytes:
    header, offset = ContainerHeader.parse(blob)
    if header.model_checksum != params.checksum():
        raise ModelMismatchError(
            f"container was written with model {header.model_checksum:08x}, got {params.checksum():08x}"
        )
    if header.length == 0:
        return b""
    use_pos = header.pos_enabled
    model = ContextModel(params, _resolve_tagger(tagger, use_pos), use_pos)
    dec = RangeDecoder(BitReader(blob, offset))
    out = bytearray()
    for _ in range(header.length):
        pmf = model.next_pmf()
        if record is not None:
            record.append(pmf.freqs)
        b = dec.decode(pmf)
        out.append(b)
        model.push(b)
    return bytes(out)


def evaluate_bpc(
    text: bytes, params: NetworkParams, tagger=None, *, use_pos: bool = True, encode: bool = False
) -> CompressionStats:
    """Ideal bits per character under the model; with ``encode`` also the realized rate."""
    text = bytes(text)
    if encode:
        return compress_with_stats(text, params, tagger, use_pos=use_pos)[1]
    _, _, ideal = _run(text, params, tagger, use_pos, False, None)
    n = len(text)
    rate = ideal / n if n else 0.0
    return CompressionStats(n, None, rate, rate, None, ideal, len(params_to_bytes(params)))


def coding_windows(text: bytes, tagger=None, window: int = 40, *, use_pos: bool = True) -> list[WindowSample]:
    """One sample per byte of ``text`` with exactly the context ``compress`` uses.

    Training on these (rather than ``make_windows``) teaches the model the
    padded start-of-text contexts and the causal tag stream.
    """
    text = bytes(text)
    tagger = _resolve_tagger(tagger, use_pos)
    inc = IncrementalTags(tagger) if use_pos else None
    padded = bytes(window) + text
    out = []
    for i, b in enumerate(text):
        tags = tuple(inc.last(window)) if inc is not None else (0,) * window
        out.append(WindowSample(padded[i : i + window], tags, b))
        if inc is not None:
            inc.append(b)
    return out


class Order0Model:
    """Adaptive byte counts starting at 1; halved when the total would exceed 2**16."""

    def __init__(self):
        self.counts = np.ones(256, dtype=np.int64)

    def pmf(self) -> QuantizedPmf:
        return QuantizedPmf(self.counts)

    def update(self, b: int):
        self.counts[b] += 1
        if self.counts.sum() > MAX_TOTAL:
            self.counts = np.maximum(self.counts // 2, 1)


def baseline_order0(text: bytes) -> CompressionStats:
    text = bytes(text)
    model = Order0Model()
    enc = RangeEncoder()
    for b in text:
        enc.encode(model.pmf(), b)
        model.update(b)
    payload = enc.finish()
    n = len(text)
    bits = enc.sink.bits_written
    return CompressionStats(
        input_bytes=n,
        output_bytes=len(payload),
        bpc=bits / n if n else 0.0,
        ideal_bpc=enc.ideal_bits / n if n else 0.0,
        payload_bits=bits,
        ideal_bits=enc.ideal_bits,
    )
