"""Finite probability measures on the word lattice.

A measure at level n is a vector of 2^n non-negative atom weights summing to
one. Every subset of a level is an event (the sigma-algebra is the powerset),
so event probabilities are plain atom sums and a set is null exactly when all
its atoms are.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .binword import BinWord, check_level, enumerate_words
from .errors import BinfiltError, LevelMismatchError
from .numerics import Number, Tolerances, to_number, zero


def _sum(values, exact: bool):
    """Correctly-rounded float sums keep long product measures normalized."""
    return sum(values, start=zero(True)) if exact else math.fsum(values)


@dataclass(frozen=True)
class FiniteMeasure:
    """A probability measure at one lattice level, atom weights in index order."""

    level: int
    weights: tuple
    exact: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        check_level(self.level)
        if len(self.weights) != (1 << self.level):
            raise LevelMismatchError(
                f"level {self.level} needs {1 << self.level} weights, got {len(self.weights)}"
            )
        neg = [w for w in self.weights if w < 0]
        if neg:
            raise BinfiltError(f"weights must be non-negative, got {neg[0]}")
        total = _sum(self.weights, self.exact)
        if abs(total - 1) > self.tolerances.norm_tol:
            raise BinfiltError(
                f"weights at level {self.level} sum to {float(total)}, not 1"
            )

    @classmethod
    def from_weights(cls, level: int, weights: Iterable, exact: bool = False,
                     tolerances: Tolerances | None = None) -> "FiniteMeasure":
        tol = tolerances if tolerances is not None else Tolerances.for_mode(exact)
        return cls(level, tuple(to_number(w, exact) for w in weights), exact, tol)

    def weight(self, w: BinWord) -> Number:
        if w.length != self.level:
            raise LevelMismatchError(
                f"word {w!r} is at level {w.length}, measure at level {self.level}"
            )
        return self.weights[w.index]

    def weight_at(self, index: int) -> Number:
        return self.weights[index]

    def event_prob(self, atoms: Iterable[BinWord]) -> Number:
        """Probability of an event given as a set of atoms (finite additivity)."""
        seen = set()
        for w in atoms:
            if w.length != self.level:
                raise LevelMismatchError(
                    f"atom {w!r} at level {w.length} in event on level {self.level}"
                )
            seen.add(w.index)
        return _sum((self.weights[i] for i in seen), self.exact)

    def is_null(self, atoms: Iterable[BinWord]) -> bool:
        return self.event_prob(atoms) <= self.tolerances.null_tol

    def is_null_atom_index(self, index: int) -> bool:
        return self.weights[index] <= self.tolerances.null_tol

    def null_atom_indices(self) -> list[int]:
        return [i for i, w in enumerate(self.weights) if w <= self.tolerances.null_tol]

    def to_rows(self) -> list[tuple[str, Number]]:
        return [(str(w), self.weights[w.index]) for w in enumerate_words(self.level)]

    @classmethod
    def from_rows(cls, level: int, rows, exact: bool = False,
                  tolerances: Tolerances | None = None) -> "FiniteMeasure":
        """Ingest (word, weight) rows, e.g. a parsed CSV; every atom of the
        level must appear exactly once and the usual invariants are checked."""
        weights = [None] * (1 << level)
        for word, w in rows:
            b = BinWord.from_string(str(word))
            if b.length != level:
                raise LevelMismatchError(f"word {word!r} is not at level {level}")
            if weights[b.index] is not None:
                raise BinfiltError(f"duplicate word {word!r}")
            weights[b.index] = to_number(w, exact)
        missing = [i for i, w in enumerate(weights) if w is None]
        if missing:
            raise BinfiltError(
                f"{len(missing)} atoms missing at level {level}, "
                f"first: {BinWord(level, missing[0])}"
            )
        tol = tolerances if tolerances is not None else Tolerances.for_mode(exact)
        return cls(level, tuple(weights), exact, tol)


@dataclass(frozen=True)
class ProbSequence:
    """Per-step up-move probabilities p_1, p_2, … materialized to a horizon."""

    values: tuple
    exact: bool = False

    def __post_init__(self):
        for i, p in enumerate(self.values, start=1):
            if not 0 <= p <= 1:
                raise BinfiltError(f"p_{i} = {float(p)} outside [0, 1]")

    @classmethod
    def from_values(cls, values: Iterable, exact: bool = False) -> "ProbSequence":
        return cls(tuple(to_number(v, exact) for v in values), exact)

    @classmethod
    def constant(cls, p, horizon: int, exact: bool = False) -> "ProbSequence":
        v = to_number(p, exact)
        return cls((v,) * horizon, exact)

    @property
    def horizon(self) -> int:
        return len(self.values)

    def p(self, i: int) -> Number:
        """p_i, 1-indexed."""
        if not 1 <= i <= len(self.values):
            raise BinfiltError(f"p_{i} not materialized (horizon {len(self.values)})")
        return self.values[i - 1]

    @property
    def non_trivial(self) -> bool:
        return any(0 < p < 1 for p in self.values)


def product_measure(p: ProbSequence, n: int,
                    tolerances: Tolerances | None = None) -> FiniteMeasure:
    """The product measure at level n: weight(d_1…d_n) = prod p_i^{d_i}(1-p_i)^{1-d_i}.

    Uses the convention 0^0 = 1 so degenerate p_i in {0, 1} are legal. Built
    level by level so weights stay exact in rational mode.
    """
    check_level(n)
    if n > p.horizon:
        raise BinfiltError(f"level {n} beyond materialized horizon {p.horizon}")
    exact = p.exact
    tol = tolerances if tolerances is not None else Tolerances.for_mode(exact)
    weights = [to_number(1, exact)]
    for i in range(1, n + 1):
        pi = p.p(i)
        qi = 1 - pi
        weights = [w * f for w in weights for f in (qi, pi)]
    return FiniteMeasure(n, tuple(weights), exact, tol)


def product_measures(p: ProbSequence, horizon: int,
                     tolerances: Tolerances | None = None) -> list[FiniteMeasure]:
    """Product measures for every level 0..horizon."""
    return [product_measure(p, n, tolerances) for n in range(horizon + 1)]


def measures_from_sequence(levels: Sequence[FiniteMeasure]) -> None:
    """Validate that a measure list is indexed by level 0..T."""
    for n, m in enumerate(levels):
        if m.level != n:
            raise LevelMismatchError(f"measure at position {n} has level {m.level}")
