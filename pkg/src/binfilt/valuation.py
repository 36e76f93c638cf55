"""Claim pricing and replication along a (possibly distorting) filtration.

Pricing discounts the payoff and takes conditional expectations step by step
under the solved measures; by the tower property this equals the single
conditional expectation along the composite arrow. At a drop step the
expectation collapses onto the visible branch: value carried by atoms the
agent cannot recognise is discarded.

Replication runs the same recursion through the hedge algebra. With
q* = (sigma + r - mu)/(2*sigma), the one-step value is the discounted
q*-average of the two successor values and the stock position is their scaled
difference:

    phi_{n+1}(v) = (V_{n+1}(v1) - V_{n+1}(v0)) / (2*sigma*S_n(v))
    V_n(v)       = ((sigma-mu+r)*V_{n+1}(v1) + (sigma+mu-r)*V_{n+1}(v0))
                   / (2*sigma*(1+r))

assigned on the visible region (the image of the step's endomap g_n), with
the bond position pinned by self-financing. When the successor step forgets
its digit, the successor's invisible value slots were never assigned; they
are filled from their visible representative (V(x) := V(g(x)), the unique
choice that reproduces the dropped-step pricing rule), which makes the hedge
ratio into a forgotten step exactly zero: the agent rolls bonds through a
transition whose outcome she will not remember.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .binword import BinWord
from .condexp import AdaptedProcess, RandomVariable, cond_exp
from .errors import BinfiltError, LevelMismatchError, ScheduleError
from .filtration import FiltrationSchedule, g_factor
from .market import Strategy, value_process
from .numerics import Number, as_float, number_str, to_number, zero
from .riskneutral import RiskNeutralSolution, check_C_legality


@dataclass(frozen=True)
class Claim:
    """A time-T payoff, stored atomwise on level T.

    The descriptor is only for configuration and reporting; pricing and
    replication read the table.
    """

    horizon: int
    payoff: RandomVariable
    descriptor: str = "custom"
    strike: Number | None = None

    def __post_init__(self):
        if self.payoff.level != self.horizon:
            raise LevelMismatchError(
                f"payoff lives on level {self.payoff.level}, claim horizon {self.horizon}"
            )


def _tabulate(stock_t: RandomVariable, fn: Callable[[Number], Number]) -> tuple:
    return tuple(fn(s) for s in stock_t.values)


def call_claim(stock: AdaptedProcess, strike, exact: bool = False) -> Claim:
    k = to_number(strike, exact)
    T = stock.horizon
    return Claim(T, RandomVariable(T, _tabulate(stock[T], lambda s: max(s - k, zero(exact)))),
                 "call", k)


def put_claim(stock: AdaptedProcess, strike, exact: bool = False) -> Claim:
    k = to_number(strike, exact)
    T = stock.horizon
    return Claim(T, RandomVariable(T, _tabulate(stock[T], lambda s: max(k - s, zero(exact)))),
                 "put", k)


def digital_claim(stock: AdaptedProcess, strike, exact: bool = False) -> Claim:
    k = to_number(strike, exact)
    one = to_number(1, exact)
    T = stock.horizon
    return Claim(T, RandomVariable(T, _tabulate(stock[T], lambda s: one if s >= k else zero(exact))),
                 "digital", k)


def custom_claim(horizon: int, table: dict, exact: bool = False) -> Claim:
    values = [zero(exact)] * (1 << horizon)
    for word, v in table.items():
        w = BinWord.from_string(str(word))
        if w.length != horizon:
            raise BinfiltError(f"payoff word {word!r} is not at level {horizon}")
        values[w.index] = to_number(v, exact)
    return Claim(horizon, RandomVariable(horizon, tuple(values)), "custom")


@dataclass(frozen=True)
class PriceCurve:
    """Discounted and cash prices per level (cash = (1+r)^n * discounted)."""

    discounted: AdaptedProcess
    cash: AdaptedProcess

    def price0(self) -> Number:
        return self.cash[0].at(0)


def price_claim(claim: Claim, solution: RiskNeutralSolution,
                schedule: FiltrationSchedule) -> PriceCurve:
    """Backward conditional expectations of the discounted payoff under the
    solved measures; requires the solved filtration to be legal."""
    if claim.horizon != schedule.horizon:
        raise LevelMismatchError(
            f"claim horizon {claim.horizon} != schedule horizon {schedule.horizon}"
        )
    legality = check_C_legality(solution, schedule)
    if not legality.legal:
        bad = [e.step for e in legality.entries if not e.null_preserving]
        raise ScheduleError(
            f"solved filtration is illegal: steps {bad} are not null-preserving"
        )
    T = schedule.horizon
    params = solution.params
    one = to_number(1, params.exact)
    growth_t = one
    for _ in range(T):
        growth_t = growth_t * (1 + params.r)
    entries = [claim.payoff.map_values(lambda v: v / growth_t)]
    for n in range(T - 1, -1, -1):
        entries.append(cond_exp(entries[-1], schedule.step(n),
                                solution.measure(n), solution.measure(n + 1)))
    entries.reverse()
    discounted = AdaptedProcess(tuple(entries))
    cash_entries = []
    g = one
    for n in range(T + 1):
        cash_entries.append(discounted[n].map_values(lambda v, gg=g: v * gg))
        g = g * (1 + params.r)
    return PriceCurve(discounted, AdaptedProcess(tuple(cash_entries)))


@dataclass(frozen=True)
class ValuationResult:
    prices: PriceCurve
    strategy: Strategy
    sweep_values: AdaptedProcess     # cash values assigned by the backward sweep
    visible_mask: tuple              # per level, tuple of bools (image of g_n)

    def rows(self) -> list[dict]:
        T = self.sweep_values.horizon
        out = []
        for n in range(T + 1):
            for i in range(1 << n):
                out.append({
                    "level": n,
                    "word": str(BinWord(n, i)),
                    "discounted_price": number_str(self.prices.discounted[n].at(i)),
                    "cash_price": number_str(self.prices.cash[n].at(i)),
                    "phi_next": number_str(self.strategy.phi[n].at(i)) if n < T else "",
                    "psi_next": number_str(self.strategy.psi[n].at(i)) if n < T else "",
                    "visible": self.visible_mask[n][i],
                })
        return out


def replicate(claim: Claim, solution: RiskNeutralSolution,
              schedule: FiltrationSchedule, stock: AdaptedProcess,
              bond: AdaptedProcess) -> ValuationResult:
    """Backward hedge construction on the visible region of every level.

    Each step must factor through the truncation (f_n = g_n o full); full and
    drop steps always do, custom steps must identify sibling pairs or are
    rejected. Holdings and values outside the visible region are set to zero
    and masked, never interpolated.
    """
    if claim.horizon != schedule.horizon:
        raise LevelMismatchError(
            f"claim horizon {claim.horizon} != schedule horizon {schedule.horizon}"
        )
    T = schedule.horizon
    params = solution.params
    exact = params.exact
    two_sigma = 2 * params.sigma
    gross = 1 + params.r
    g_maps = []
    for n in range(T):
        g = g_factor(schedule.step(n))
        if g is None:
            raise ScheduleError(
                f"step {n} does not factor through the truncation; "
                f"replication needs f_n = g_n o full"
            )
        g_maps.append(g)

    masks = [schedule.visible_mask(n) for n in range(T + 1)]
    prices = price_claim(claim, solution, schedule)

    values = list(claim.payoff.values)
    sweep = [RandomVariable(T, tuple(values))]
    phi, psi = [], []
    for n in range(T - 1, -1, -1):
        if n + 1 <= T - 1:
            # fill slots the successor sweep left unassigned (atoms invisible
            # at level n+1) from their visible representative
            g_next = g_maps[n + 1]
            values = [
                values[x] if masks[n + 1][x] else values[g_next.table[x]]
                for x in range(1 << (n + 1))
            ]
        g_n = g_maps[n]
        vn = [zero(exact)] * (1 << n)
        phin = [zero(exact)] * (1 << n)
        psin = [zero(exact)] * (1 << n)
        for v in range(1 << n):
            if not masks[n][v]:
                continue
            # fiber representative: v itself for full/drop (g is idempotent
            # there); an arbitrary preimage for custom factorizations
            a = v if g_n.table[v] == v else g_n.table.index(v)
            w1 = values[(a << 1) | 1]
            w0 = values[a << 1]
            s = stock[n].at(v)
            phin[v] = (w1 - w0) / (two_sigma * s)
            vn[v] = ((params.sigma - params.mu + params.r) * w1
                     + (params.sigma + params.mu - params.r) * w0) / (two_sigma * gross)
            psin[v] = (vn[v] - s * phin[v]) / bond[n].at(v)
        phi.append(RandomVariable(n, tuple(phin)))
        psi.append(RandomVariable(n, tuple(psin)))
        sweep.append(RandomVariable(n, tuple(vn)))
        values = vn
    phi.reverse()
    psi.reverse()
    sweep.reverse()
    return ValuationResult(
        prices,
        Strategy(tuple(phi), tuple(psi)),
        AdaptedProcess(tuple(sweep)),
        tuple(tuple(m) for m in masks),
    )


@dataclass(frozen=True)
class ReplicationCheck:
    name: str
    passed: bool
    max_error: float
    worst_atom: str | None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_error": self.max_error,
            "worst_atom": self.worst_atom,
        }


@dataclass(frozen=True)
class ReplicationReport:
    checks: tuple
    vacuous_atoms: tuple     # level-T atoms with zero risk-neutral mass

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "vacuous_atoms": list(self.vacuous_atoms),
        }


def verify_replication(result: ValuationResult, claim: Claim,
                       stock: AdaptedProcess, bond: AdaptedProcess,
                       schedule: FiltrationSchedule,
                       solution: RiskNeutralSolution, tol) -> ReplicationReport:
    """Numerical audit: self-financing on visible atoms, terminal match on
    every atom the solved measures can reach, and agreement of the sweep's
    time-0 value with the risk-neutral cash price."""
    T = schedule.horizon
    strategy = result.strategy
    portfolio = value_process(strategy, stock, bond, schedule)

    sf_worst, sf_atom = 0.0, None
    for n in range(1, T):
        cost = stock[n] * strategy.phi_into(n + 1) + bond[n] * strategy.psi_into(n + 1)
        for i in range(1 << n):
            if not result.visible_mask[n][i]:
                continue
            dev = abs(cost.at(i) - portfolio[n].at(i))
            if dev > sf_worst:
                sf_worst, sf_atom = dev, str(BinWord(n, i))

    term_worst, term_atom = 0.0, None
    q_t = solution.measure(T)
    vacuous = []
    for i in range(1 << T):
        if q_t.is_null_atom_index(i):
            vacuous.append(str(BinWord(T, i)))
            continue
        dev = abs(portfolio[T].at(i) - claim.payoff.at(i))
        if dev > term_worst:
            term_worst, term_atom = dev, str(BinWord(T, i))

    price0 = result.prices.price0()
    v0 = result.sweep_values[0].at(0)
    price_err = abs(v0 - price0)

    checks = (
        ReplicationCheck("self_financing_visible", sf_worst <= tol,
                         as_float(sf_worst), sf_atom),
        ReplicationCheck("terminal_match_reachable", term_worst <= tol,
                         as_float(term_worst), term_atom),
        ReplicationCheck("initial_value_matches_price", price_err <= tol,
                         as_float(price_err), None),
    )
    return ReplicationReport(checks, tuple(vacuous))
