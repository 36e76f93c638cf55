"""Binary words: the atoms of the lattice sample spaces.

Level n of the lattice is the set of all binary words d_1…d_n. A word is
stored as (length, index) where the index packs the digits with d_1 as the
most significant bit, so truncating the last digit is a single right shift
and the enumeration order at a level is just 0 … 2^n − 1.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import BinfiltError, CapacityError

# Hard ceiling for dense atom vectors (2^30 atoms); scenarios default to a
# lower limit that callers may raise up to this bound.
MAX_LEVEL = 30
DEFAULT_SCENARIO_LEVEL_LIMIT = 20


def check_level(n: int, limit: int = MAX_LEVEL) -> int:
    if n < 0:
        raise BinfiltError(f"level must be non-negative, got {n}")
    if n > limit:
        raise CapacityError(f"level {n} exceeds the supported bound {limit}")
    return n


@dataclass(frozen=True, order=True)
class BinWord:
    """A binary word d_1…d_n; the empty word (n = 0) is valid and unique."""

    length: int
    index: int

    def __post_init__(self):
        check_level(self.length)
        if not 0 <= self.index < (1 << self.length):
            raise BinfiltError(
                f"index {self.index} out of range for a word of length {self.length}"
            )

    @classmethod
    def empty(cls) -> "BinWord":
        return cls(0, 0)

    @classmethod
    def from_string(cls, s: str) -> "BinWord":
        if any(c not in "01" for c in s):
            raise BinfiltError(f"word must consist of '0'/'1' digits, got {s!r}")
        n = len(s)
        check_level(n)
        return cls(n, int(s, 2) if n else 0)

    def digit(self, k: int) -> int:
        """Digit d_k, 1-indexed from the left."""
        if not 1 <= k <= self.length:
            raise BinfiltError(f"digit position {k} out of range 1..{self.length}")
        return (self.index >> (self.length - k)) & 1

    @property
    def last_digit(self) -> int:
        if self.length == 0:
            raise BinfiltError("the empty word has no last digit")
        return self.index & 1

    def append(self, d: int) -> "BinWord":
        if d not in (0, 1):
            raise BinfiltError(f"digit must be 0 or 1, got {d}")
        check_level(self.length + 1)
        return BinWord(self.length + 1, (self.index << 1) | d)

    def truncate(self) -> "BinWord":
        """Drop the last digit (the level-lowering truncation)."""
        if self.length == 0:
            raise BinfiltError("cannot truncate the empty word")
        return BinWord(self.length - 1, self.index >> 1)

    def digit_count(self, j: int) -> int:
        """Number of positions k with d_k = j."""
        if j not in (0, 1):
            raise BinfiltError(f"digit must be 0 or 1, got {j}")
        ones = bin(self.index).count("1")
        return ones if j == 1 else self.length - ones

    def __str__(self) -> str:
        return format(self.index, f"0{self.length}b") if self.length else ""

    def __repr__(self) -> str:
        return f"BinWord('{self}')"


def enumerate_words(n: int, limit: int = MAX_LEVEL) -> list[BinWord]:
    """All 2^n words of length n in index order (lexicographic, d_1 first)."""
    check_level(n, limit)
    return [BinWord(n, i) for i in range(1 << n)]


def append(w: BinWord, d: int) -> BinWord:
    return w.append(d)


def digit_count(w: BinWord, j: int) -> int:
    return w.digit_count(j)
