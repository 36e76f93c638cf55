"""Level-linking maps and filtration schedules.

A step map sends level n+1 atoms to level n atoms. Two named kinds matter:

* ``full``: truncation d_1…d_n d_{n+1} -> d_1…d_n, the standard flow of
  information (one right shift on atom indices).
* ``drop``: d_1…d_{n-1} d_n d_{n+1} -> d_1…d_{n-1} 0, the step-n digit is
  forgotten and replaced by the placeholder 0. Its image misses every level-n
  atom ending in 1, so those atoms become invisible to an agent who carries
  this map in her filtration.

A schedule fixes one map per step and is a legal filtration exactly when each
step is null-preserving for the measures it links.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .binword import BinWord, check_level
from .errors import BinfiltError, LevelMismatchError, ScheduleError
from .measure import FiniteMeasure


class MapKind(str, Enum):
    FULL = "full"
    DROP = "drop"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FiltMap:
    """A total map from level ``source_level`` atoms to level ``target_level`` atoms.

    ``table[i]`` is the target atom index of source atom i. Preimages are
    tabulated once on construction; they partition the source level.
    """

    source_level: int
    target_level: int
    table: tuple
    kind: MapKind = MapKind.CUSTOM
    _preimages: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_level(self.source_level)
        check_level(self.target_level)
        if self.target_level > self.source_level:
            raise ScheduleError(
                f"map must not raise the level ({self.source_level} -> {self.target_level})"
            )
        if len(self.table) != (1 << self.source_level):
            raise LevelMismatchError(
                f"table length {len(self.table)} != 2^{self.source_level} source atoms"
            )
        n_targets = 1 << self.target_level
        pre = [[] for _ in range(n_targets)]
        for src, dst in enumerate(self.table):
            if not 0 <= dst < n_targets:
                raise BinfiltError(f"target index {dst} out of range at source {src}")
            pre[dst].append(src)
        object.__setattr__(self, "_preimages", tuple(tuple(p) for p in pre))

    def __call__(self, w: BinWord) -> BinWord:
        if w.length != self.source_level:
            raise LevelMismatchError(
                f"word {w!r} at level {w.length}, map source level {self.source_level}"
            )
        return BinWord(self.target_level, self.table[w.index])

    def apply_index(self, i: int) -> int:
        return self.table[i]

    def preimage(self, a: BinWord) -> list[BinWord]:
        """{ b | f(b) = a } for a target atom a."""
        if a.length != self.target_level:
            raise LevelMismatchError(
                f"word {a!r} at level {a.length}, map target level {self.target_level}"
            )
        return [BinWord(self.source_level, i) for i in self._preimages[a.index]]

    def preimage_indices(self, target_index: int) -> tuple:
        return self._preimages[target_index]

    def branch_split(self, a: BinWord, j: int) -> list[BinWord]:
        """The subset of the preimage whose final digit equals j."""
        if j not in (0, 1):
            raise BinfiltError(f"digit must be 0 or 1, got {j}")
        return [b for b in self.preimage(a) if b.index & 1 == j]

    def image_indices(self) -> list[int]:
        return [i for i, p in enumerate(self._preimages) if p]


def full_map(n: int) -> FiltMap:
    """Truncation from level n+1 to level n."""
    check_level(n + 1)
    table = tuple(b >> 1 for b in range(1 << (n + 1)))
    return FiltMap(n + 1, n, table, MapKind.FULL)


def drop_map(n: int) -> FiltMap:
    """Forget the step-n digit: level n+1 atom d_1…d_{n+1} -> d_1…d_{n-1} 0."""
    if n < 1:
        raise ScheduleError("a drop step needs n >= 1: there is no digit to forget at step 0")
    check_level(n + 1)
    table = tuple((b >> 2) << 1 for b in range(1 << (n + 1)))
    return FiltMap(n + 1, n, table, MapKind.DROP)


def custom_map(n: int, targets: Sequence[str]) -> FiltMap:
    """A user-supplied step map given as a list of target words per source atom."""
    check_level(n + 1)
    if len(targets) != (1 << (n + 1)):
        raise ScheduleError(
            f"custom map at step {n} needs {1 << (n + 1)} entries, got {len(targets)}"
        )
    idx = []
    for t in targets:
        w = BinWord.from_string(t) if isinstance(t, str) else t
        if w.length != n:
            raise ScheduleError(f"custom map target {w!r} is not at level {n}")
        idx.append(w.index)
    return FiltMap(n + 1, n, tuple(idx), MapKind.CUSTOM)


def make_map(kind: MapKind, n: int) -> FiltMap:
    if kind == MapKind.FULL:
        return full_map(n)
    if kind == MapKind.DROP:
        return drop_map(n)
    raise ScheduleError("custom maps are built with custom_map(n, targets)")


def identity_map(n: int) -> FiltMap:
    return FiltMap(n, n, tuple(range(1 << n)), MapKind.CUSTOM)


def compose_steps(steps: Sequence[FiltMap], m: int, n: int) -> FiltMap:
    """The composite map from level n down to level m (identity when m = n).

    ``steps[k]`` must be the step-k map (level k+1 -> k); adjacent levels must
    chain. Matches stepwise composition f_m o f_{m+1} o … o f_{n-1}.
    """
    if m > n:
        raise ScheduleError(f"need m <= n, got m={m}, n={n}")
    if m == n:
        return identity_map(m)
    if n - 1 >= len(steps):
        raise ScheduleError(f"composition to level {n} needs steps up to {n - 1}")
    table = list(range(1 << n))
    for k in range(n - 1, m - 1, -1):
        step = steps[k]
        if step.source_level != k + 1 or step.target_level != k:
            raise ScheduleError(
                f"step {k} links levels {step.source_level}->{step.target_level}, broken chain"
            )
        table = [step.table[i] for i in table]
    kind = MapKind.FULL if all(s.kind == MapKind.FULL for s in steps[m:n]) else MapKind.CUSTOM
    return FiltMap(n, m, tuple(table), kind)


def g_factor(f: FiltMap) -> FiltMap | None:
    """Factor a step map as f = g o full with g an endomap of the target level.

    Exists iff f identifies each sibling pair (f(a0) = f(a1)); then
    g(a) := f(a0). Full steps give the identity; drop steps give the
    last-digit-zeroing endomap. Returns None when no factorization exists.
    """
    if f.source_level != f.target_level + 1:
        return None
    n = f.target_level
    g_table = []
    for a in range(1 << n):
        t0 = f.table[a << 1]
        t1 = f.table[(a << 1) | 1]
        if t0 != t1:
            return None
        g_table.append(t0)
    return FiltMap(n, n, tuple(g_table), MapKind.CUSTOM)


def existence_witness(f: FiltMap, source_measure: FiniteMeasure,
                      target_measure: FiniteMeasure):
    """First violation of "null target atoms pull back to null sets".

    This direction alone makes conditional expectation along the map well
    defined: a null target atom whose preimage carries mass would have to
    absorb that mass into a zero-weight average. Returns
    (target word, offending source word) or None. Atom-level checking
    suffices: events are atom sets and weights are non-negative.
    """
    _check_map_measures(f, source_measure, target_measure)
    for a in range(1 << f.target_level):
        if target_measure.is_null_atom_index(a):
            for b in f.preimage_indices(a):
                if not source_measure.is_null_atom_index(b):
                    return (BinWord(f.target_level, a), BinWord(f.source_level, b))
    return None


def reachability_witness(f: FiltMap, source_measure: FiniteMeasure,
                         target_measure: FiniteMeasure):
    """First positive-mass target atom whose preimage carries no mass.

    A map failing this strands probability on states the future never
    produces: the drop map does exactly that on atoms ending in 1, which is
    why it is a legal filtration step only when those atoms are already null
    (p_n = 0 under product measures, or the solved measures). Returns the
    offending target word or None.
    """
    _check_map_measures(f, source_measure, target_measure)
    for a in range(1 << f.target_level):
        if not target_measure.is_null_atom_index(a):
            if all(source_measure.is_null_atom_index(b) for b in f.preimage_indices(a)):
                return BinWord(f.target_level, a)
    return None


def null_preservation_witness(f: FiltMap, source_measure: FiniteMeasure,
                              target_measure: FiniteMeasure):
    """First violation of the two-sided arrow condition, tagged by direction.

    Null sets must correspond exactly along a legal filtration step: null
    target atoms pull back to null sets (conditional expectations exist) and
    positive target atoms keep positive preimage mass (no stranded states).
    Returns ("null_target_has_mass_upstream", target, source),
    ("positive_target_unreachable", target, None), or None.
    """
    w = existence_witness(f, source_measure, target_measure)
    if w is not None:
        return ("null_target_has_mass_upstream", w[0], w[1])
    a = reachability_witness(f, source_measure, target_measure)
    if a is not None:
        return ("positive_target_unreachable", a, None)
    return None


def is_null_preserving(f: FiltMap, source_measure: FiniteMeasure,
                       target_measure: FiniteMeasure) -> bool:
    """True iff null sets correspond exactly along the map (both directions)."""
    return null_preservation_witness(f, source_measure, target_measure) is None


def is_measure_preserving(f: FiltMap, source_measure: FiniteMeasure,
                          target_measure: FiniteMeasure, tol=None) -> bool:
    """True iff the pushforward of the source measure equals the target atomwise."""
    _check_map_measures(f, source_measure, target_measure)
    if tol is None:
        tol = target_measure.tolerances.norm_tol
    for a in range(1 << f.target_level):
        pushed = sum(
            (source_measure.weight_at(b) for b in f.preimage_indices(a)),
            start=0 * target_measure.weight_at(a),
        )
        if abs(pushed - target_measure.weight_at(a)) > tol:
            return False
    return True


def _check_map_measures(f: FiltMap, source_measure: FiniteMeasure,
                        target_measure: FiniteMeasure) -> None:
    if source_measure.level != f.source_level:
        raise LevelMismatchError(
            f"source measure level {source_measure.level} != map source {f.source_level}"
        )
    if target_measure.level != f.target_level:
        raise LevelMismatchError(
            f"target measure level {target_measure.level} != map target {f.target_level}"
        )


class ScheduleKind(str, Enum):
    CLASSICAL = "classical"
    DROP_K = "drop_k"
    ELDERLY = "elderly"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FiltrationSchedule:
    """A horizon T and one step map per step n = 0…T-1 (level n+1 -> n)."""

    horizon: int
    steps: tuple
    kind: ScheduleKind = ScheduleKind.CUSTOM
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise ScheduleError(f"horizon must be >= 1, got {self.horizon}")
        check_level(self.horizon)
        if len(self.steps) != self.horizon:
            raise ScheduleError(
                f"horizon {self.horizon} needs {self.horizon} steps, got {len(self.steps)}"
            )
        for n, s in enumerate(self.steps):
            if s.source_level != n + 1 or s.target_level != n:
                raise ScheduleError(
                    f"step {n} must link level {n + 1} -> {n}, "
                    f"got {s.source_level} -> {s.target_level}"
                )

    def step(self, n: int) -> FiltMap:
        return self.steps[n]

    def step_kinds(self) -> list[MapKind]:
        return [s.kind for s in self.steps]

    def drop_steps(self) -> list[int]:
        return [n for n, s in enumerate(self.steps) if s.kind == MapKind.DROP]

    def composite(self, m: int, n: int) -> FiltMap:
        return compose_steps(self.steps, m, n)

    def visible_mask(self, n: int) -> list[bool]:
        """Visibility of level-n atoms: the image of g_n (everything if n = T)."""
        if n >= self.horizon:
            return [True] * (1 << n)
        g = g_factor(self.steps[n])
        if g is None:
            return [True] * (1 << n)
        img = set(g.table)
        return [i in img for i in range(1 << n)]


def classical_schedule(horizon: int) -> FiltrationSchedule:
    steps = tuple(full_map(n) for n in range(horizon))
    return FiltrationSchedule(horizon, steps, ScheduleKind.CLASSICAL)


def drop_k_schedule(horizon: int, k: int) -> FiltrationSchedule:
    if not 1 <= k <= horizon - 1:
        raise ScheduleError(f"drop step k must satisfy 1 <= k <= T-1, got k={k}, T={horizon}")
    steps = tuple(drop_map(n) if n == k else full_map(n) for n in range(horizon))
    return FiltrationSchedule(horizon, steps, ScheduleKind.DROP_K, {"k": k})


def elderly_schedule(horizon: int, k0: int, k1: int) -> FiltrationSchedule:
    """Drop every step in the window k0 <= n <= T - k1, full elsewhere."""
    if k0 < 1:
        raise ScheduleError(f"elderly window start k0 must be >= 1, got {k0}")
    if k1 < 1:
        raise ScheduleError(f"elderly window tail k1 must be >= 1, got {k1}")
    steps = tuple(
        drop_map(n) if k0 <= n <= horizon - k1 else full_map(n)
        for n in range(horizon)
    )
    return FiltrationSchedule(horizon, steps, ScheduleKind.ELDERLY, {"k0": k0, "k1": k1})


def custom_schedule(horizon: int, step_tables: Sequence[Sequence[str]]) -> FiltrationSchedule:
    if len(step_tables) != horizon:
        raise ScheduleError(
            f"custom schedule needs {horizon} step tables, got {len(step_tables)}"
        )
    steps = tuple(custom_map(n, t) for n, t in enumerate(step_tables))
    return FiltrationSchedule(horizon, steps, ScheduleKind.CUSTOM)


@dataclass(frozen=True)
class StepValidation:
    step: int
    kind: MapKind
    null_preserving: bool
    witness: tuple | None  # (direction tag, target word, source word or None)


@dataclass(frozen=True)
class ScheduleValidation:
    """Per-step legality report; the schedule is a legal filtration iff all pass."""

    entries: tuple
    notes: tuple = ()

    @property
    def legal(self) -> bool:
        return all(e.null_preserving for e in self.entries)

    def failing_steps(self) -> list[int]:
        return [e.step for e in self.entries if not e.null_preserving]

    def to_dict(self) -> dict:
        return {
            "legal": self.legal,
            "steps": [
                {
                    "step": e.step,
                    "kind": e.kind.value,
                    "null_preserving": e.null_preserving,
                    "witness": None if e.witness is None else {
                        "direction": e.witness[0],
                        "target": str(e.witness[1]),
                        "source": None if e.witness[2] is None else str(e.witness[2]),
                    },
                }
                for e in self.entries
            ],
            "notes": list(self.notes),
        }


def validate_schedule(schedule: FiltrationSchedule,
                      measures: Sequence[FiniteMeasure]) -> ScheduleValidation:
    """Check each step for null preservation against the given level measures."""
    if len(measures) < schedule.horizon + 1:
        raise LevelMismatchError(
            f"need measures for levels 0..{schedule.horizon}, got {len(measures)}"
        )
    entries = []
    for n, f in enumerate(schedule.steps):
        witness = null_preservation_witness(f, measures[n + 1], measures[n])
        entries.append(StepValidation(n, f.kind, witness is None, witness))
    notes = []
    if schedule.kind == ScheduleKind.ELDERLY and not schedule.drop_steps():
        notes.append("elderly window is empty; schedule degenerates to classical")
    return ScheduleValidation(tuple(entries), tuple(notes))
