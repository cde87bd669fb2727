"""Simple and encoded bitmap indexes over in-memory columns.

A simple bitmap keeps one bit-vector per distinct value: bit ``i`` of the
vector for ``v`` is set when row ``i`` holds ``v``.  An encoded bitmap
stores only ``ceil(log2 d)`` bit-slices for ``d`` distinct values plus a
value-to-code mapping; equality lookups AND together each slice either
directly (code bit 1) or negated (code bit 0).  Codes are assigned in
first-appearance order starting at zero, and slice ``j`` carries bit ``j``
of the code (slice 1 is the high bit when the width is 2).

The advisor applies the usual low-cardinality rule: a bitmap index pays
off when distinct/rows is at most 0.1% (inclusive).

Bit-vectors are packed into 64-bit words with an explicit length; padding
bits in the last word stay zero and never appear in query results.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence, Union

__all__ = [
    "BitVector",
    "SimpleBitmap",
    "EncodedBitmap",
    "Advice",
    "build_simple",
    "build_encoded",
    "query_eq",
    "query_in",
    "advise",
    "code_width",
]

_WORD_BITS = 64


class BitVector:
    """Fixed-length bit sequence packed into 64-bit words."""

    __slots__ = ("length", "words")

    def __init__(self, length: int, words: array | None = None):
        if length < 0:
            raise ValueError("length must be >= 0")
        self.length = length
        n_words = (length + _WORD_BITS - 1) // _WORD_BITS
        if words is None:
            words = array("Q", bytes(8 * n_words))
        if len(words) != n_words:
            raise ValueError("word count does not match length")
        self.words = words

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        vec = cls(length)
        full = (1 << _WORD_BITS) - 1
        for i in range(len(vec.words)):
            vec.words[i] = full
        vec._mask_padding()
        return vec

    def _mask_padding(self) -> None:
        tail = self.length % _WORD_BITS
        if tail and self.words:
            self.words[-1] &= (1 << tail) - 1

    def set(self, i: int) -> None:
        if not 0 <= i < self.length:
            raise IndexError(f"bit {i} out of range 0..{self.length - 1}")
        self.words[i // _WORD_BITS] |= 1 << (i % _WORD_BITS)

    def get(self, i: int) -> bool:
        if not 0 <= i < self.length:
            raise IndexError(f"bit {i} out of range 0..{self.length - 1}")
        return bool(self.words[i // _WORD_BITS] >> (i % _WORD_BITS) & 1)

    def __and__(self, other: "BitVector") -> "BitVector":
        self._check_same(other)
        out = array("Q", (a & b for a, b in zip(self.words, other.words)))
        return BitVector(self.length, out)

    def andnot(self, other: "BitVector") -> "BitVector":
        """self AND (NOT other); padding stays zero."""
        self._check_same(other)
        full = (1 << _WORD_BITS) - 1
        out = array("Q", (a & (b ^ full) for a, b in zip(self.words, other.words)))
        return BitVector(self.length, out)

    def _check_same(self, other: "BitVector") -> None:
        if self.length != other.length:
            raise ValueError("bit-vector lengths differ")

    def ones_positions(self) -> Iterator[int]:
        for wi, w in enumerate(self.words):
            base = wi * _WORD_BITS
            while w:
                low = w & -w
                yield base + low.bit_length() - 1
                w ^= low

    def count(self) -> int:
        return sum(w.bit_count() for w in self.words)

    def to01(self) -> str:
        """Row 0 first: [a,b] column's vector for 'a' renders as '10'."""
        return "".join("1" if self.get(i) else "0" for i in range(self.length))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and self.words == other.words

    def __repr__(self) -> str:
        shown = self.to01() if self.length <= 64 else f"<{self.length} bits>"
        return f"BitVector({shown})"


def code_width(distinct: int) -> int:
    """Bits per row for an encoded bitmap: ceil(log2 d), minimum 1."""
    if distinct < 1:
        raise ValueError("distinct count must be >= 1")
    if distinct == 1:
        return 1
    return (distinct - 1).bit_length()


@dataclass(frozen=True)
class SimpleBitmap:
    domain: tuple[Hashable, ...]
    vectors: tuple[BitVector, ...]
    rows: int

    def vector(self, value: Hashable) -> BitVector | None:
        try:
            return self.vectors[self.domain.index(value)]
        except ValueError:
            return None

    def bit_count(self) -> int:
        return len(self.domain) * self.rows


@dataclass(frozen=True)
class EncodedBitmap:
    width: int
    slices: tuple[BitVector, ...]
    mapping: dict[Hashable, int]
    rows: int

    def slice_for_bit(self, j: int) -> BitVector:
        """Slice carrying code bit ``j`` (j=0 is the low bit)."""
        return self.slices[j]

    def bit_count(self) -> int:
        return self.width * self.rows


def build_simple(column: Sequence[Hashable]) -> SimpleBitmap:
    """One vector per distinct value, in first-appearance order."""
    if len(column) == 0:
        raise ValueError("cannot index an empty column")
    domain: list[Hashable] = []
    index: dict[Hashable, int] = {}
    for v in column:
        if v not in index:
            index[v] = len(domain)
            domain.append(v)
    vectors = [BitVector(len(column)) for _ in domain]
    for i, v in enumerate(column):
        vectors[index[v]].set(i)
    return SimpleBitmap(tuple(domain), tuple(vectors), len(column))


def build_encoded(column: Sequence[Hashable]) -> EncodedBitmap:
    """ceil(log2 d) slices plus a first-appearance value->code mapping."""
    if len(column) == 0:
        raise ValueError("cannot index an empty column")
    mapping: dict[Hashable, int] = {}
    for v in column:
        if v not in mapping:
            mapping[v] = len(mapping)
    width = code_width(len(mapping))
    slices = [BitVector(len(column)) for _ in range(width)]
    for i, v in enumerate(column):
        code = mapping[v]
        for j in range(width):
            if code >> j & 1:
                slices[j].set(i)
    return EncodedBitmap(width, tuple(slices), mapping, len(column))


def _eq_simple(index: SimpleBitmap, value: Hashable) -> set[int]:
    vec = index.vector(value)
    if vec is None:
        return set()
    return set(vec.ones_positions())


def _eq_encoded(index: EncodedBitmap, value: Hashable) -> set[int]:
    code = index.mapping.get(value)
    if code is None:
        return set()
    acc = BitVector.ones(index.rows)
    for j in range(index.width):
        if code >> j & 1:
            acc = acc & index.slices[j]
        else:
            acc = acc.andnot(index.slices[j])
    return set(acc.ones_positions())


def query_eq(index: Union[SimpleBitmap, EncodedBitmap], value: Hashable) -> set[int]:
    """Row ids holding ``value``; empty set when the value never occurred."""
    if isinstance(index, SimpleBitmap):
        return _eq_simple(index, value)
    if isinstance(index, EncodedBitmap):
        return _eq_encoded(index, value)
    raise TypeError(f"not a bitmap index: {index!r}")


def query_in(index: Union[SimpleBitmap, EncodedBitmap], values: Sequence[Hashable]) -> set[int]:
    """Union of per-value equality lookups."""
    out: set[int] = set()
    for v in values:
        out |= query_eq(index, v)
    return out


@dataclass(frozen=True)
class Advice:
    verdict: str
    ratio: float
    distinct: int
    rows: int

    @property
    def eligible(self) -> bool:
        return self.verdict == "bitmap_eligible"


def advise(distinct: int, rows: int) -> Advice:
    """Low-cardinality rule: eligible iff distinct/rows <= 1/1000, inclusive.

    The threshold comparison is done in integers so the boundary case is
    exact.
    """
    if distinct < 1 or rows < distinct:
        raise ValueError(f"need rows >= distinct >= 1, got distinct={distinct}, rows={rows}")
    eligible = distinct * 1000 <= rows
    verdict = "bitmap_eligible" if eligible else "too_high_cardinality"
    return Advice(verdict, distinct / rows, distinct, rows)
