"""Conditional expectation along a level-linking map, and martingale checks.

For a map f from level n+1 to level n that is null-preserving for the measure
pair (source at n+1, target at n), the conditional expectation of a variable v
is the level-n variable u fixed atomwise by

    u(a) * target({a}) = sum over b in f^-1(a) of v(b) * source({b}).

On null target atoms u is only determined up to measure zero; we pin the
representative to 0 so results are deterministic and testable. The defining
identity then holds for every event A at the target level:

    sum_{a in A} u(a) target({a}) = sum_{b in f^-1(A)} v(b) source({b}).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .binword import BinWord, check_level
from .errors import BinfiltError, LevelMismatchError, NullPreservationError
from .filtration import FiltMap, FiltrationSchedule, existence_witness
from .measure import FiniteMeasure
from .numerics import Number, as_float, to_number, zero


@dataclass(frozen=True)
class RandomVariable:
    """A real-valued function on one lattice level, stored atomwise."""

    level: int
    values: tuple

    def __post_init__(self):
        check_level(self.level)
        if len(self.values) != (1 << self.level):
            raise LevelMismatchError(
                f"level {self.level} needs {1 << self.level} values, got {len(self.values)}"
            )

    @classmethod
    def constant(cls, level: int, c) -> "RandomVariable":
        return cls(level, (c,) * (1 << level))

    @classmethod
    def from_function(cls, level: int, fn: Callable[[BinWord], Number]) -> "RandomVariable":
        return cls(level, tuple(fn(BinWord(level, i)) for i in range(1 << level)))

    @classmethod
    def from_values(cls, level: int, values, exact: bool = False) -> "RandomVariable":
        return cls(level, tuple(to_number(v, exact) for v in values))

    def __call__(self, w: BinWord) -> Number:
        if w.length != self.level:
            raise LevelMismatchError(
                f"word {w!r} at level {w.length}, variable at level {self.level}"
            )
        return self.values[w.index]

    def at(self, index: int) -> Number:
        return self.values[index]

    def map_values(self, fn: Callable[[Number], Number]) -> "RandomVariable":
        return RandomVariable(self.level, tuple(fn(v) for v in self.values))

    def _binary(self, other, op) -> "RandomVariable":
        if isinstance(other, RandomVariable):
            if other.level != self.level:
                raise LevelMismatchError(
                    f"cannot combine variables at levels {self.level} and {other.level}"
                )
            return RandomVariable(
                self.level, tuple(op(a, b) for a, b in zip(self.values, other.values))
            )
        return RandomVariable(self.level, tuple(op(a, other) for a in self.values))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return self.map_values(lambda v: -v)

    def max_abs_diff(self, other: "RandomVariable") -> float:
        return max(
            (abs(a - b) for a, b in zip(self.values, other.values)),
            default=0,
        )

    def to_rows(self) -> list[tuple[str, Number]]:
        return [(str(BinWord(self.level, i)), v) for i, v in enumerate(self.values)]

    @classmethod
    def from_rows(cls, level: int, rows, exact: bool = False) -> "RandomVariable":
        """Ingest (word, value) rows; every atom must appear exactly once."""
        values = [None] * (1 << level)
        for word, v in rows:
            b = BinWord.from_string(str(word))
            if b.length != level:
                raise LevelMismatchError(f"word {word!r} is not at level {level}")
            if values[b.index] is not None:
                raise BinfiltError(f"duplicate word {word!r}")
            values[b.index] = to_number(v, exact)
        missing = [i for i, v in enumerate(values) if v is None]
        if missing:
            raise BinfiltError(
                f"{len(missing)} atoms missing at level {level}, "
                f"first: {BinWord(level, missing[0])}"
            )
        return cls(level, tuple(values))


@dataclass(frozen=True)
class AdaptedProcess:
    """One random variable per time index n = 0…T."""

    entries: tuple

    def __post_init__(self):
        for n, x in enumerate(self.entries):
            if x.level != n:
                raise LevelMismatchError(f"entry {n} has level {x.level}")

    @property
    def horizon(self) -> int:
        return len(self.entries) - 1

    def entry(self, n: int) -> RandomVariable:
        return self.entries[n]

    def __getitem__(self, n: int) -> RandomVariable:
        return self.entries[n]


def cond_exp(v: RandomVariable, f: FiltMap, target_measure: FiniteMeasure,
             source_measure: FiniteMeasure) -> RandomVariable:
    """Conditional expectation of v along f.

    Requires the existence direction of the arrow condition: null target
    atoms must pull back to null sets, otherwise no variable satisfies the
    defining identity. (A positive target atom with an empty preimage is
    fine here; its value is forced to 0 by the identity itself.)
    """
    if v.level != f.source_level:
        raise LevelMismatchError(
            f"variable at level {v.level}, map source level {f.source_level}"
        )
    if target_measure.level != f.target_level or source_measure.level != f.source_level:
        raise LevelMismatchError("measure levels do not match the map")
    witness = existence_witness(f, source_measure, target_measure)
    if witness is not None:
        raise NullPreservationError(
            f"no conditional expectation along this map: target atom "
            f"'{witness[0]}' is null but source atom '{witness[1]}' has weight "
            f"{as_float(source_measure.weight(witness[1]))}"
        )
    exact = source_measure.exact
    out = []
    for a in range(1 << f.target_level):
        ta = target_measure.weight_at(a)
        if target_measure.is_null_atom_index(a):
            out.append(zero(exact))
            continue
        acc = zero(exact)
        for b in f.preimage_indices(a):
            acc += v.at(b) * source_measure.weight_at(b)
        out.append(acc / ta)
    return RandomVariable(f.target_level, tuple(out))


def cond_exp_indicator(f: FiltMap, target_measure: FiniteMeasure,
                       source_measure: FiniteMeasure) -> RandomVariable:
    """Conditional expectation of the constant-one variable on the source level."""
    one = to_number(1, source_measure.exact)
    return cond_exp(
        RandomVariable.constant(f.source_level, one), f, target_measure, source_measure
    )


def xi_process(horizon: int, exact: bool = False) -> AdaptedProcess:
    """The up/down indicator: value 2*d_n - 1 at level-n atom d_1…d_n.

    The level-0 entry is the zero variable; it exists only to keep the
    process shape uniform and is never used by the market recursions.
    """
    if horizon < 1:
        raise BinfiltError(f"horizon must be >= 1, got {horizon}")
    entries = [RandomVariable.constant(0, zero(exact))]
    one = to_number(1, exact)
    for n in range(1, horizon + 1):
        entries.append(
            RandomVariable(n, tuple((2 * (i & 1) - 1) * one for i in range(1 << n)))
        )
    return AdaptedProcess(tuple(entries))


def import_via(f: FiltMap, x: RandomVariable) -> RandomVariable:
    """Pull a past variable to a later level along a (possibly composite) map."""
    if x.level != f.target_level:
        raise LevelMismatchError(
            f"variable at level {x.level}, map target level {f.target_level}"
        )
    return RandomVariable(f.source_level, tuple(x.at(f.table[b]) for b in range(1 << f.source_level)))


@dataclass(frozen=True)
class MartingaleStep:
    step: int
    status: str          # "ok" | "violated" | "not_null_preserving"
    max_deviation: float
    worst_atom: str | None
    detail: str | None = None


@dataclass(frozen=True)
class MartingaleReport:
    """Per-step one-step martingale check (adjacent arrows suffice by the
    tower property of conditional expectation, which is itself property-tested)."""

    entries: tuple
    tol: float

    @property
    def is_martingale(self) -> bool:
        return all(e.status == "ok" for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "is_martingale": self.is_martingale,
            "tol": as_float(self.tol),
            "steps": [
                {
                    "step": e.step,
                    "status": e.status,
                    "max_deviation": e.max_deviation,
                    "worst_atom": e.worst_atom,
                    "detail": e.detail,
                }
                for e in self.entries
            ],
        }


def is_martingale(x: AdaptedProcess, schedule: FiltrationSchedule,
                  measures: Sequence[FiniteMeasure], tol) -> MartingaleReport:
    """Check E(x_{n+1} | step n) = x_n at non-null atoms for every step."""
    if x.horizon < schedule.horizon:
        raise LevelMismatchError(
            f"process horizon {x.horizon} shorter than schedule horizon {schedule.horizon}"
        )
    entries = []
    for n in range(schedule.horizon):
        f = schedule.step(n)
        try:
            e = cond_exp(x[n + 1], f, measures[n], measures[n + 1])
        except NullPreservationError as exc:
            entries.append(MartingaleStep(n, "not_null_preserving", float("nan"), None, str(exc)))
            continue
        worst = 0.0
        worst_atom = None
        for a in range(1 << n):
            if measures[n].is_null_atom_index(a):
                continue
            dev = abs(e.at(a) - x[n].at(a))
            if dev > worst:
                worst = dev
                worst_atom = str(BinWord(n, a))
        status = "ok" if worst <= tol else "violated"
        entries.append(MartingaleStep(n, status, as_float(worst), worst_atom))
    return MartingaleReport(tuple(entries), tol)
