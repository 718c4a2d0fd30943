"""Arithmetic coding.

Two coders live here:

* an exact reference encoder over rationals (``rational_encode`` /
  ``rational_decode``) that narrows ``[0, 1)`` symbol by symbol with
  ``fractions.Fraction`` and is used to replay small textbook examples;
* a streaming integer range coder (``RangeEncoder`` / ``RangeDecoder``)
  with a 32-bit range register, carry propagation through a pending-bit
  counter and bitwise renormalization whenever the range drops below 2**24.

The range coder consumes ``QuantizedPmf`` frequency tables. ``quantize_pmf``
turns a real-valued distribution (e.g. a softmax output) into such a table
deterministically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np

__all__ = [
    "CorruptStreamError",
    "FixedModel",
    "RationalInterval",
    "rational_encode",
    "rational_decode",
    "QuantizedPmf",
    "quantize_pmf",
    "MAX_TOTAL",
    "QUANT_BUDGET",
    "BitWriter",
    "BitReader",
    "RangeEncoder",
    "RangeDecoder",
    "encode_symbols",
    "decode_symbols",
]

MAX_TOTAL = 1 << 16
QUANT_BUDGET = MAX_TOTAL - 256

RANGE_BITS = 32
TOP = 1 << RANGE_BITS
MASK = TOP - 1
HALF = 1 << (RANGE_BITS - 1)
RENORM_BELOW = 1 << 24
INITIAL_RANGE = MASK


class CorruptStreamError(ValueError):
    """The bit stream ended before the decoder could finish."""


# ---------------------------------------------------------------------------
# exact reference coder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedModel:
    symbols: tuple
    probs: tuple
    cumulative: tuple = field(init=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        probs = tuple(Fraction(p) for p in self.probs)
        if len(symbols) != len(probs):
            raise ValueError("symbols and probs differ in length")
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols")
        if any(p <= 0 for p in probs):
            raise ValueError("every probability must be > 0")
        if sum(probs) != 1:
            raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
        cum = [Fraction(0)]
        for p in probs[:-1]:
            cum.append(cum[-1] + p)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "cumulative", tuple(cum))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, object]]) -> "FixedModel":
        """Build from ``(symbol, probability)`` pairs; floats go through ``str``
        so that ``0.05`` means exactly 1/20."""
        syms, probs = [], []
        for s, p in pairs:
            syms.append(s)
            probs.append(Fraction(str(p)) if isinstance(p, float) else Fraction(p))
        return cls(tuple(syms), tuple(probs))

    def index(self, symbol) -> int:
        return self.symbols.index(symbol)


@dataclass(frozen=True)
class RationalInterval:
    low: Fraction
    high: Fraction

    def __post_init__(self):
        if not (0 <= self.low < self.high <= 1):
            raise ValueError(f"invalid interval [{self.low}, {self.high})")

    @property
    def width(self) -> Fraction:
        return self.high - self.low

    def __contains__(self, x) -> bool:
        return self.low <= Fraction(x) < self.high

    def contains_interval(self, other: "RationalInterval") -> bool:
        return self.low <= other.low and other.high <= self.high


def rational_encode(message: Sequence, model: FixedModel, *, steps: list | None = None) -> RationalInterval:
    """Narrow ``[0, 1)`` once per symbol and return the final subinterval.

    If ``steps`` is a list, every intermediate interval is appended to it.
    """
    index = {s: i for i, s in enumerate(model.symbols)}
    low, high = Fraction(0), Fraction(1)
    for pos, sym in enumerate(message):
        try:
            i = index[sym]
        except (KeyError, TypeError):
            raise ValueError(f"symbol {sym!r} at index {pos} is not in the model") from None
        width = high - low
        low, high = low + width * model.cumulative[i], low + width * (model.cumulative[i] + model.probs[i])
        if steps is not None:
            steps.append(RationalInterval(low, high))
    return RationalInterval(low, high)


def rational_decode(point, length: int, model: FixedModel) -> list:
    point = Fraction(str(point)) if isinstance(point, float) else Fraction(point)
    if not 0 <= point < 1:
        raise ValueError("point must lie in [0, 1)")
    out = []
    low, width = Fraction(0), Fraction(1)
    for _ in range(length):
        target = (point - low) / width
        i = len(model.cumulative) - 1
        while model.cumulative[i] > target:
            i -= 1
        out.append(model.symbols[i])
        low += width * model.cumulative[i]
        width *= model.probs[i]
    return out


# ---------------------------------------------------------------------------
# frequency tables
# ---------------------------------------------------------------------------


class QuantizedPmf:
    """Integer frequency table; every symbol keeps a frequency of at least 1."""

    __slots__ = ("freqs", "cumulative", "total")

    def __init__(self, freqs):
        freqs = np.asarray(freqs, dtype=np.int64)
        if freqs.ndim != 1 or freqs.size == 0:
            raise ValueError("freqs must be a non-empty vector")
        if freqs.min() < 1:
            raise ValueError("every frequency must be >= 1")
        cum = np.zeros(freqs.size + 1, dtype=np.int64)
        np.cumsum(freqs, out=cum[1:])
        total = int(cum[-1])
        if total > MAX_TOTAL:
            raise ValueError(f"total frequency {total} exceeds {MAX_TOTAL}")
        self.freqs = freqs
        self.cumulative = cum
        self.total = total

    def __len__(self):
        return self.freqs.size

    def code_length(self, symbol: int) -> float:
        """Ideal cost of ``symbol`` in bits."""
        return math.log2(self.total / int(self.freqs[symbol]))

    def __eq__(self, other):
        return isinstance(other, QuantizedPmf) and np.array_equal(self.freqs, other.freqs)

    def __repr__(self):
        return f"QuantizedPmf(n={self.freqs.size}, total={self.total})"


def quantize_pmf(p) -> QuantizedPmf:
    """freq_i = max(1, floor(p_i * (2**16 - 256)))."""
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValueError("pmf has non-finite entries")
    if p.min() < 0:
        raise ValueError("pmf has negative entries")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"pmf sums to {p.sum()!r}")
    freqs = np.maximum(np.floor(p * QUANT_BUDGET).astype(np.int64), 1)
    return QuantizedPmf(freqs)


# ---------------------------------------------------------------------------
# bit I/O
# ---------------------------------------------------------------------------


class BitWriter:
    """MSB-first bit sink; the last partial byte is zero-padded."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._n = 0
        self.bits_written = 0

    def write(self, bit: int):
        self._acc = (self._acc << 1) | bit
        self._n += 1
        self.bits_written += 1
        if self._n == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._n = 0

    def write_run(self, bit: int, count: int):
        for _ in range(count):
            self.write(bit)

    def getvalue(self) -> bytes:
        out = bytes(self._buf)
        if self._n:
            out += bytes([self._acc << (8 - self._n)])
        return out


class BitReader:
    """MSB-first bit source.

    Past the end it yields zeros, but only for ``slack`` bits; one more read
    raises ``CorruptStreamError``. A range decoder over a well-formed stream
    never needs more than 32 bits of padding.
    """

    def __init__(self, data: bytes, offset: int = 0, slack: int = RANGE_BITS):
        self._data = data
        self._pos = offset * 8
        self._end = len(data) * 8
        self._slack = slack

    @property
    def bits_read(self) -> int:
        return self._pos

    def read(self) -> int:
        pos = self._pos
        self._pos = pos + 1
        if pos < self._end:
            return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1
        if pos - self._end >= self._slack:
            raise CorruptStreamError("stream truncated")
        return 0


# ---------------------------------------------------------------------------
# range coder
# ---------------------------------------------------------------------------


class RangeEncoder:
    """Integer range encoder writing single bits to a ``BitWriter``.

    ``low`` may temporarily carry into bit 32. The most recent settled bit is
    held back in ``_cache`` and the run of 1-bits after it is counted in
    ``pending``; a carry flips that run to zeros and increments the cache.
    """

    def __init__(self, sink: BitWriter | None = None):
        self.sink = sink if sink is not None else BitWriter()
        self.low = 0
        self.range = INITIAL_RANGE
        self.pending = 0
        self._cache = -1  # -1: no bit shifted out yet
        self.ideal_bits = 0.0

    def encode(self, pmf: QuantizedPmf, symbol: int):
        cum = pmf.cumulative
        total = pmf.total
        rng = self.range
        lo = rng * int(cum[symbol]) // total
        hi = rng * int(cum[symbol + 1]) // total
        self.low += lo
        self.range = hi - lo
        self.ideal_bits += math.log2(total / (int(cum[symbol + 1]) - int(cum[symbol])))
        while self.range < RENORM_BELOW:
            self._shift()
            self.range <<= 1

    def _shift(self):
        low = self.low
        if low < HALF or low >= TOP:
            carry = low >> RANGE_BITS
            sink = self.sink
            if self._cache >= 0:
                sink.write(self._cache + carry)
            elif carry:
                raise AssertionError("carry out of an empty stream")
            if self.pending:
                sink.write_run((1 + carry) & 1, self.pending)
                self.pending = 0
            self._cache = (low >> (RANGE_BITS - 1)) & 1
        else:
            self.pending += 1
        self.low = (low << 1) & MASK

    def finish(self) -> bytes:
        """Emit the shortest code value inside ``[low, low + range)``."""
        low, high = self.low, self.low + self.range
        for k in range(RANGE_BITS + 1):
            step = 1 << (RANGE_BITS - k)
            v = -(-low // step) * step
            if v < high:
                break
        self.low = v
        for _ in range(k):
            self._shift()
        # settle whatever is still held back
        carry = self.low >> RANGE_BITS
        if self._cache >= 0:
            self.sink.write(self._cache + carry)
        if self.pending:
            self.sink.write_run((1 + carry) & 1, self.pending)
        self.pending = 0
        self._cache = -1
        return self.sink.getvalue()


class RangeDecoder:
    """Inverse of ``RangeEncoder``; tracks ``value = code - low`` so no carry
    ever reaches the decoder."""

    def __init__(self, source: BitReader):
        self.source = source
        self.range = INITIAL_RANGE
        v = 0
        for _ in range(RANGE_BITS):
            v = (v << 1) | source.read()
        self.value = v

    def decode(self, pmf: QuantizedPmf) -> int:
        rng = self.range
        total = pmf.total
        bounds = rng * pmf.cumulative // total
        value = self.value
        s = int(np.searchsorted(bounds, value, side="right")) - 1
        if s >= len(pmf):
            raise CorruptStreamError("code value outside the coding interval")
        lo = int(bounds[s])
        self.value = value - lo
        self.range = int(bounds[s + 1]) - lo
        read = self.source.read
        while self.range < RENORM_BELOW:
            self.value = (self.value << 1) | read()
            self.range <<= 1
        return s


def encode_symbols(symbols: Iterable[int], pmfs: Iterable[QuantizedPmf]) -> tuple[bytes, float]:
    """Encode ``symbols[i]`` under ``pmfs[i]``; returns ``(stream, ideal_bits)``."""
    enc = RangeEncoder()
    for s, pmf in zip(symbols, pmfs, strict=True):
        enc.encode(pmf, s)
    return enc.finish(), enc.ideal_bits


def decode_symbols(data: bytes, pmfs: Iterable[QuantizedPmf]) -> list[int]:
    dec = RangeDecoder(BitReader(data))
    return [dec.decode(pmf) for pmf in pmfs]
