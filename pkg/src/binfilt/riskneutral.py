"""Risk-neutral measure construction over full/drop schedules.

The discounted stock S'_n = S_n / (1+r)^n is a martingale for a measure
sequence Q exactly when, per step n and target atom a,

    Q_n({a}) = c1 * Q_{n+1}(up moves over a) + c0 * Q_{n+1}(down moves over a)

with c1 = (1+mu+sigma)/(1+r) and c0 = (1+mu-sigma)/(1+r); "moves over a" are
the preimage atoms of a split by their final digit. Under the standing
factorization (each Q_n is a product of per-branch kernels q_k summing to one
over siblings) the constraints decouple per parent atom and solve forward:

* a full step constrains the next kernel level to the constant
  q* = 1/2 + (r-mu)/(2*sigma) at every positive-mass parent;
* a drop step at n has empty preimages over atoms ending in 1, forcing
  q_n(a1) = 0, q_n(a0) = 1, and passes the q* constraint to the visible
  children at level n+1;
* kernel entries under zero-mass parents are never constrained; they take the
  configured free-value policy and are recorded as free parameters.

One family of equations cannot be satisfied by any measure sequence at all:
at a step n whose successor step n+1 is a drop, the step-n equation wants
mass q* > 0 on the d_{n+1} = 1 atoms that the drop simultaneously forces to
zero (summing the step-n equations over atoms gives 1 = c1*m1 + c0*(1-m1),
i.e. m1 = q*, while the drop demands m1 = 0). Forgetting is therefore not
risk-neutral for the transition that feeds it: the visible branch carries
conditional mass c0 != 1. ``transition_check`` reports these feeder steps
separately with their exact structural residual instead of pretending the
equation could hold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .binword import BinWord
from .condexp import RandomVariable
from .errors import BinfiltError, LevelMismatchError, NoSolutionError, ScheduleError
from .filtration import (
    FiltrationSchedule,
    MapKind,
    full_map,
    is_measure_preserving,
    null_preservation_witness,
)
from .measure import FiniteMeasure, ProbSequence, product_measures
from .numerics import Number, Tolerances, as_float, number_str, to_number, zero


@dataclass(frozen=True)
class RNCoefficients:
    """One-step growth of the discounted stock on up/down moves."""

    c1: Number
    c0: Number

    @classmethod
    def from_params(cls, params) -> "RNCoefficients":
        denom = 1 + params.r
        return cls((1 + params.mu + params.sigma) / denom,
                   (1 + params.mu - params.sigma) / denom)

    @property
    def admissible(self) -> bool:
        """c0 < 1 < c1, equivalent to |mu - r| < sigma."""
        return self.c0 < 1 < self.c1


def risk_neutral_up_prob(params) -> Number:
    """The unique x with c1*x + c0*(1-x) = 1: x = 1/2 + (r-mu)/(2*sigma)."""
    half = to_number(1, params.exact) / 2
    return half + (params.r - params.mu) / (2 * params.sigma)


def require_admissible(params) -> None:
    if abs(params.mu - params.r) >= params.sigma:
        raise NoSolutionError(
            f"|mu - r| = {as_float(abs(params.mu - params.r))} >= sigma = "
            f"{as_float(params.sigma)}: the market admits arbitrage and no "
            f"risk-neutral measure exists"
        )


@dataclass(frozen=True)
class TransitionKernel:
    """Per-branch conditional probabilities q_k on levels k = 1…T.

    entries[k-1] is the level-k table: entry at atom d_1…d_k is the
    conditional probability of the last digit given the prefix, so siblings
    sum to one.
    """

    entries: tuple
    exact: bool = False

    def __post_init__(self):
        for k, q in enumerate(self.entries, start=1):
            if q.level != k:
                raise LevelMismatchError(f"kernel level {k} variable has level {q.level}")

    @property
    def horizon(self) -> int:
        return len(self.entries)

    def level(self, k: int):
        return self.entries[k - 1]

    def q(self, w: BinWord) -> Number:
        if not 1 <= w.length <= self.horizon:
            raise LevelMismatchError(f"no kernel level {w.length}")
        return self.entries[w.length - 1].at(w.index)

    def validate(self, tol=None) -> None:
        if tol is None:
            tol = zero(self.exact) if self.exact else 1e-9
        for k, q in enumerate(self.entries, start=1):
            for v in q.values:
                if v < -tol or v > 1 + tol:
                    raise BinfiltError(f"kernel value {as_float(v)} outside [0,1] at level {k}")
            for a in range(1 << (k - 1)):
                s = q.at(a << 1) + q.at((a << 1) | 1)
                if abs(s - 1) > tol:
                    raise BinfiltError(
                        f"kernel siblings under {BinWord(k - 1, a)} sum to {as_float(s)}"
                    )

    def to_measures(self, tolerances: Tolerances | None = None) -> list[FiniteMeasure]:
        """Product measures Q_0…Q_T induced by the kernel."""
        tol = tolerances if tolerances is not None else Tolerances.for_mode(self.exact)
        out = [FiniteMeasure(0, (to_number(1, self.exact),), self.exact, tol)]
        for k in range(1, self.horizon + 1):
            prev = out[-1]
            q = self.entries[k - 1]
            weights = tuple(prev.weight_at(b >> 1) * q.at(b) for b in range(1 << k))
            out.append(FiniteMeasure(k, weights, self.exact, tol))
        return out


@dataclass(frozen=True)
class FreeValuePolicy:
    """Value assigned to the up-branch kernel entry wherever the equations
    leave it free; recorded with the solution so runs reproduce."""

    name: str                         # "half" | "zero" | "one" | "table"
    table: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, name: str) -> "FreeValuePolicy":
        if name not in ("half", "zero", "one"):
            raise BinfiltError(f"unknown free-value policy {name!r}")
        return cls(name)

    @classmethod
    def from_table(cls, table: dict) -> "FreeValuePolicy":
        clean = {}
        for word, v in table.items():
            if not 0 <= float(v) <= 1:
                raise BinfiltError(f"free value for {word!r} outside [0,1]: {v}")
            clean[str(word)] = v
        return cls("table", clean)

    def value_for(self, child_up: BinWord, exact: bool) -> Number:
        if self.name == "half":
            return to_number(1, exact) / 2
        if self.name == "zero":
            return zero(exact)
        if self.name == "one":
            return to_number(1, exact)
        key = str(child_up)
        if key in self.table:
            return to_number(self.table[key], exact)
        return to_number(1, exact) / 2


@dataclass(frozen=True)
class FreeParameter:
    level: int
    atom: str          # the up-branch child whose kernel value was chosen
    value: Number
    provenance: str

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "atom": self.atom,
            "value": number_str(self.value),
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class LevelEquivalence:
    level: int
    equivalent: bool
    witness: str | None   # an atom with P > 0 but Q = 0


@dataclass(frozen=True)
class RiskNeutralSolution:
    params: object                # MarketParams the kernel was solved for
    kernel: TransitionKernel
    measures: tuple
    free_parameters: tuple
    constrained_entries: int
    free_entries: int
    feeder_steps: tuple           # steps whose successor is a drop
    diagnostics: tuple = ()       # LevelEquivalence per level, when P was supplied

    @property
    def horizon(self) -> int:
        return self.kernel.horizon

    def measure(self, n: int) -> FiniteMeasure:
        return self.measures[n]

    def to_dict(self) -> dict:
        return {
            "q": [
                {str(BinWord(k, i)): number_str(self.kernel.level(k).at(i))
                 for i in range(1 << k)}
                for k in range(1, self.horizon + 1)
            ],
            "Q": [
                {str(BinWord(n, i)): number_str(self.measures[n].weight_at(i))
                 for i in range(1 << n)}
                for n in range(self.horizon + 1)
            ],
            "free_parameters": [fp.to_dict() for fp in self.free_parameters],
            "diagnostics": {
                "constrained_entries": self.constrained_entries,
                "free_entries": self.free_entries,
                "feeder_steps": list(self.feeder_steps),
                "equivalence_with_p": [
                    {"level": d.level, "equivalent": d.equivalent, "witness": d.witness}
                    for d in self.diagnostics
                ],
            },
        }


def _feeder_steps(schedule: FiltrationSchedule) -> tuple:
    """Steps n whose successor step n+1 is a drop; their equations are
    structurally unsatisfiable (see module docstring)."""
    kinds = schedule.step_kinds()
    return tuple(
        n for n in range(schedule.horizon - 1) if kinds[n + 1] == MapKind.DROP
    )


def solve_schedule(params, schedule: FiltrationSchedule,
                   free_policy: FreeValuePolicy | None = None,
                   prob_seq: ProbSequence | None = None,
                   tolerances: Tolerances | None = None) -> RiskNeutralSolution:
    """Forward per-level solve of the martingale constraints for any
    full/drop schedule (custom steps are rejected: their equations need not
    decouple per parent atom)."""
    require_admissible(params)
    kinds = schedule.step_kinds()
    if any(k == MapKind.CUSTOM for k in kinds):
        raise ScheduleError("risk-neutral solving supports full/drop steps only")
    exact = params.exact
    tol = tolerances if tolerances is not None else Tolerances.for_mode(exact)
    policy = free_policy if free_policy is not None else FreeValuePolicy.constant("half")
    qstar = risk_neutral_up_prob(params)
    one = to_number(1, exact)

    prev_weights = [one]
    kernel_levels = []
    free_params = []
    constrained = 0
    free = 0
    for k in range(1, schedule.horizon + 1):
        drop_here = k <= schedule.horizon - 1 and kinds[k] == MapKind.DROP
        q_vals = [zero(exact)] * (1 << k)
        weights = [zero(exact)] * (1 << k)
        for a in range(1 << (k - 1)):
            up = (a << 1) | 1
            down = a << 1
            if prev_weights[a] <= tol.null_tol:
                qv = policy.value_for(BinWord(k, up), exact)
                free_params.append(FreeParameter(
                    k, str(BinWord(k, up)), qv, "unconstrained: zero-mass parent"
                ))
                free += 1
            elif drop_here:
                qv = zero(exact)
                constrained += 1
            else:
                qv = qstar
                constrained += 1
            q_vals[up] = qv
            q_vals[down] = one - qv
            weights[up] = prev_weights[a] * qv
            weights[down] = prev_weights[a] * (one - qv)
        kernel_levels.append(RandomVariable(k, tuple(q_vals)))
        prev_weights = weights

    kernel = TransitionKernel(tuple(kernel_levels), exact)
    kernel.validate()  # cannot fail for full/drop steps inside the band
    measures = tuple(kernel.to_measures(tol))
    diagnostics = ()
    if prob_seq is not None:
        diagnostics = tuple(equivalence_report(measures, prob_seq, tol))
    return RiskNeutralSolution(
        params, kernel, measures, tuple(free_params), constrained, free,
        _feeder_steps(schedule), diagnostics,
    )


def solve_classical(params, horizon: int,
                    prob_seq: ProbSequence | None = None,
                    tolerances: Tolerances | None = None) -> RiskNeutralSolution:
    """All-full schedule: constant kernel q* everywhere, no free parameters."""
    from .filtration import classical_schedule

    return solve_schedule(params, classical_schedule(horizon),
                          prob_seq=prob_seq, tolerances=tolerances)


def solve_drop_k(params, horizon: int, k: int,
                 free_policy: FreeValuePolicy | None = None,
                 prob_seq: ProbSequence | None = None,
                 tolerances: Tolerances | None = None) -> RiskNeutralSolution:
    """Single drop at step k: q* everywhere except q_k(a1) = 0, q_k(a0) = 1,
    with the free policy filling kernel entries under the extinguished branch."""
    from .filtration import drop_k_schedule

    return solve_schedule(params, drop_k_schedule(horizon, k), free_policy,
                          prob_seq, tolerances)


def equivalence_report(measures: Sequence[FiniteMeasure], prob_seq: ProbSequence,
                       tolerances: Tolerances | None = None) -> list[LevelEquivalence]:
    """Per level: does some atom carry P-mass but no Q-mass (so Q is not an
    equivalent martingale measure)?"""
    horizon = len(measures) - 1
    p_measures = product_measures(prob_seq, horizon, tolerances)
    out = []
    for n in range(horizon + 1):
        witness = None
        for i in range(1 << n):
            if (not p_measures[n].is_null_atom_index(i)
                    and measures[n].is_null_atom_index(i)):
                witness = str(BinWord(n, i))
                break
        out.append(LevelEquivalence(n, witness is None, witness))
    return out


# ---------------------------------------------------------------------------
# Martingale-condition check over a measure sequence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionStepCheck:
    step: int
    kind: MapKind
    max_violation: Number
    worst_atom: str | None
    structural: bool     # successor step is a drop: equation unsatisfiable

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "kind": self.kind.value,
            "max_violation": as_float(self.max_violation),
            "worst_atom": self.worst_atom,
            "structural": self.structural,
        }


@dataclass(frozen=True)
class TransitionCheckReport:
    """Atomwise audit of the martingale equations.

    ``max_violation_supported`` ranges over steps whose equations are
    satisfiable; ``max_violation_all`` includes the feeder steps, whose
    residual (1-c0) * mass is a structural property of forgetting, not a
    solver defect. ``passes`` refers to the supported domain; both numbers are
    always reported.
    """

    entries: tuple
    tol: Number

    @property
    def feeder_steps(self) -> list[int]:
        return [e.step for e in self.entries if e.structural]

    @property
    def max_violation_supported(self) -> Number:
        vals = [e.max_violation for e in self.entries if not e.structural]
        return max(vals, default=0)

    @property
    def max_violation_all(self) -> Number:
        return max((e.max_violation for e in self.entries), default=0)

    @property
    def passes(self) -> bool:
        return self.max_violation_supported <= self.tol

    def to_dict(self) -> dict:
        return {
            "passes": self.passes,
            "tol": as_float(self.tol),
            "max_violation_supported": as_float(self.max_violation_supported),
            "max_violation_all": as_float(self.max_violation_all),
            "feeder_steps": self.feeder_steps,
            "steps": [e.to_dict() for e in self.entries],
        }


def transition_check(measures: Sequence[FiniteMeasure], schedule: FiltrationSchedule,
                     params, tol=None) -> TransitionCheckReport:
    """Evaluate the per-atom martingale equation at every (step, atom)."""
    require_admissible(params)
    if len(measures) < schedule.horizon + 1:
        raise LevelMismatchError(
            f"need measures for levels 0..{schedule.horizon}, got {len(measures)}"
        )
    coeff = RNCoefficients.from_params(params)
    exact = params.exact
    if tol is None:
        tol = zero(exact) if exact else 1e-12
    feeders = set(_feeder_steps(schedule))
    entries = []
    for n in range(schedule.horizon):
        f = schedule.step(n)
        worst = zero(exact)
        worst_atom = None
        for a in range(1 << n):
            up_mass = zero(exact)
            down_mass = zero(exact)
            for b in f.preimage_indices(a):
                if b & 1:
                    up_mass += measures[n + 1].weight_at(b)
                else:
                    down_mass += measures[n + 1].weight_at(b)
            resid = abs(measures[n].weight_at(a)
                        - (coeff.c1 * up_mass + coeff.c0 * down_mass))
            if resid > worst:
                worst = resid
                worst_atom = str(BinWord(n, a))
        entries.append(TransitionStepCheck(n, f.kind, worst, worst_atom, n in feeders))
    return TransitionCheckReport(tuple(entries), tol)


# Backwards-friendly alias used by the service layer and docs.
martingale_condition_check = transition_check


# ---------------------------------------------------------------------------
# Product-structure predicates (three equivalent formulations)
# ---------------------------------------------------------------------------

def levels_consistent(measures: Sequence[FiniteMeasure], tol=None) -> bool:
    """Q_{n+1}({a0, a1}) = Q_n({a}) for every n and parent atom a."""
    if tol is None:
        tol = 0 if measures[0].exact else 1e-9
    for n in range(len(measures) - 1):
        for a in range(1 << measures[n].level):
            s = measures[n + 1].weight_at(a << 1) + measures[n + 1].weight_at((a << 1) | 1)
            if abs(s - measures[n].weight_at(a)) > tol:
                return False
    return True


def full_steps_measure_preserving(measures: Sequence[FiniteMeasure], tol=None) -> bool:
    """Each truncation pushes Q_{n+1} forward onto Q_n."""
    for n in range(len(measures) - 1):
        if not is_measure_preserving(full_map(n), measures[n + 1], measures[n], tol):
            return False
    return True


def kernel_factorizable(measures: Sequence[FiniteMeasure], tol=None) -> bool:
    """Some sibling-summing kernel factorizes the sequence as path products."""
    if tol is None:
        tol = 0 if measures[0].exact else 1e-9
    for n in range(len(measures) - 1):
        for a in range(1 << measures[n].level):
            pa = measures[n].weight_at(a)
            c0 = measures[n + 1].weight_at(a << 1)
            c1 = measures[n + 1].weight_at((a << 1) | 1)
            if pa <= tol:
                # the kernel under a dead parent is free, but the children
                # must carry no mass for any product through zero to match
                if c0 > tol or c1 > tol:
                    return False
            elif abs(c0 + c1 - pa) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Filtration-compatibility checks
# ---------------------------------------------------------------------------

def check_U_compatibility(b_schedule: FiltrationSchedule,
                          c_schedule: FiltrationSchedule) -> bool:
    """Same measurable-space skeleton: horizons, atom sets and step tables
    coincide (measures are not compared)."""
    if b_schedule.horizon != c_schedule.horizon:
        return False
    return all(
        fb.table == fc.table
        for fb, fc in zip(b_schedule.steps, c_schedule.steps)
    )


@dataclass(frozen=True)
class LegalityStep:
    step: int
    kind: MapKind
    null_preserving: bool
    witness: dict | None


@dataclass(frozen=True)
class LegalityReport:
    entries: tuple

    @property
    def legal(self) -> bool:
        return all(e.null_preserving for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "legal": self.legal,
            "steps": [
                {
                    "step": e.step,
                    "kind": e.kind.value,
                    "null_preserving": e.null_preserving,
                    "witness": e.witness,
                }
                for e in self.entries
            ],
        }


def check_C_legality(solution: RiskNeutralSolution,
                     schedule: FiltrationSchedule) -> LegalityReport:
    """Each step must be null-preserving for the solved measures, otherwise
    the risk-neutral filtration is not a filtration at all."""
    entries = []
    for n in range(schedule.horizon):
        f = schedule.step(n)
        w = null_preservation_witness(f, solution.measure(n + 1), solution.measure(n))
        entries.append(LegalityStep(
            n, f.kind, w is None,
            None if w is None else {
                "direction": w[0],
                "target": str(w[1]),
                "source": None if w[2] is None else str(w[2]),
            },
        ))
    return LegalityReport(tuple(entries))
