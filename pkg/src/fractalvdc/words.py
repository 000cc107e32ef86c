"""Bit-packed binary words.

A word ``a = a_1 ... a_n`` is stored as an integer whose most significant of
``n`` bits is the first letter ``a_1``. Integer order is therefore
lexicographic order, and word ``i`` of length ``n`` indexes the ``i``-th
cylinder from the left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ValidationError

MAX_WORD_LENGTH = 62


@dataclass(frozen=True, order=True)
class Word:
    bits: int = 0
    n: int = 0

    def __post_init__(self):
        if self.n < 0 or self.n > MAX_WORD_LENGTH:
            raise ValidationError(f"word length must lie in [0, {MAX_WORD_LENGTH}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValidationError(f"bits {self.bits:#x} do not fit in {self.n} letters")

    @classmethod
    def from_str(cls, s: str) -> "Word":
        s = s.strip()
        if any(c not in "01" for c in s):
            raise ValidationError(f"not a binary word: {s!r}")
        return cls(int(s, 2) if s else 0, len(s))

    @classmethod
    def from_letters(cls, letters) -> "Word":
        bits = 0
        for c in letters:
            bits = (bits << 1) | (int(c) & 1)
        return cls(bits, len(letters))

    @classmethod
    def coerce(cls, w) -> "Word":
        if isinstance(w, Word):
            return w
        if isinstance(w, str):
            return cls.from_str(w)
        return cls.from_letters(list(w))

    def __len__(self) -> int:
        return self.n

    def __str__(self) -> str:
        return format(self.bits, f"0{self.n}b") if self.n else ""

    def __add__(self, other: "Word") -> "Word":
        other = Word.coerce(other)
        return Word((self.bits << other.n) | other.bits, self.n + other.n)

    def letter(self, i: int) -> int:
        """Letter ``a_i`` with 1-based ``i`` (``a_1`` is the coarse one)."""
        if not 1 <= i <= self.n:
            raise IndexError(i)
        return (self.bits >> (self.n - i)) & 1

    @property
    def letters(self) -> tuple:
        return tuple((self.bits >> (self.n - 1 - j)) & 1 for j in range(self.n))

    def prefix(self, m: int) -> "Word":
        return Word(self.bits >> (self.n - m), m)

    def suffix(self, m: int) -> "Word":
        return Word(self.bits & ((1 << m) - 1), m)

    def split(self, *lengths: int) -> list:
        """Cut into consecutive pieces of the given lengths (must sum to ``n``)."""
        if sum(lengths) != self.n:
            raise ValidationError("piece lengths must sum to the word length")
        out, rest = [], self.n
        for m in lengths:
            rest -= m
            out.append(Word((self.bits >> rest) & ((1 << m) - 1), m))
        return out

    def dyadic(self) -> float:
        """The binary fraction ``0.a_1 a_2 ... a_n``."""
        return self.bits / float(1 << self.n) if self.n else 0.0


def all_words(n: int) -> Iterator[Word]:
    for i in range(1 << n):
        yield Word(i, n)


def letters_matrix(bits, n: int) -> np.ndarray:
    """``(len(bits), n)`` uint8 array of letters, column 0 is the first letter."""
    bits = np.asarray(bits, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((bits[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def leading_bits(x, n: int) -> np.ndarray:
    """First ``n`` binary digits of ``x`` in [0, 1) packed as integers."""
    x = np.asarray(x, dtype=np.float64)
    return np.floor(np.ldexp(x, n)).astype(np.int64)
