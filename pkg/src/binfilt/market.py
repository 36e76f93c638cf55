"""Stock/bond dynamics over a schedule, strategies, gains, and arbitrage.

The stock recursion composes the previous level's prices with the schedule's
step map before applying the up/down factor, so an information-dropping step
makes the price itself forget the erased digit. The bond ignores the path and
compounds at 1+r through any map (constant composed with anything is
constant; asserted, not assumed).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .binword import BinWord
from .condexp import AdaptedProcess, RandomVariable, import_via, xi_process
from .errors import BinfiltError, LevelMismatchError
from .measure import FiniteMeasure
from .numerics import Number, as_float, to_number, zero


@dataclass(frozen=True)
class MarketParams:
    """Drift, volatility, rate and spot; mu > sigma - 1 keeps prices positive."""

    mu: Number
    sigma: Number
    r: Number
    s0: Number
    exact: bool = False

    def __post_init__(self):
        if self.sigma <= 0:
            raise BinfiltError(f"sigma must be > 0, got {as_float(self.sigma)}")
        if self.mu <= self.sigma - 1:
            raise BinfiltError(
                f"mu must exceed sigma - 1 to keep the stock positive, "
                f"got mu={as_float(self.mu)}, sigma={as_float(self.sigma)}"
            )
        if self.r <= -1:
            raise BinfiltError(f"r must be > -1, got {as_float(self.r)}")
        if self.s0 <= 0:
            raise BinfiltError(f"s0 must be > 0, got {as_float(self.s0)}")

    @classmethod
    def create(cls, mu, sigma, r, s0, exact: bool = False) -> "MarketParams":
        return cls(
            to_number(mu, exact), to_number(sigma, exact),
            to_number(r, exact), to_number(s0, exact), exact,
        )

    @property
    def up_factor(self) -> Number:
        return 1 + self.mu + self.sigma

    @property
    def down_factor(self) -> Number:
        return 1 + self.mu - self.sigma

    @property
    def excess_band(self) -> Number:
        """|mu - r| - sigma; negative inside the no-arbitrage region."""
        return abs(self.mu - self.r) - self.sigma


def stock_process(params: MarketParams, schedule) -> AdaptedProcess:
    """S_0 = s0 at the empty word; S_{n+1} = (S_n o f_n) * (1 + mu + sigma*xi_{n+1})."""
    xi = xi_process(schedule.horizon, params.exact)
    entries = [RandomVariable.constant(0, params.s0)]
    for n in range(schedule.horizon):
        f = schedule.step(n)
        prev = entries[-1]
        vals = tuple(
            prev.at(f.table[b]) * (1 + params.mu + params.sigma * xi[n + 1].at(b))
            for b in range(1 << (n + 1))
        )
        entries.append(RandomVariable(n + 1, vals))
    return AdaptedProcess(tuple(entries))


def bond_process(params: MarketParams, schedule) -> AdaptedProcess:
    """b_0 = 1; b_{n+1} = (b_n o f_n) * (1+r). Constant (1+r)^n at every level."""
    one = to_number(1, params.exact)
    entries = [RandomVariable.constant(0, one)]
    for n in range(schedule.horizon):
        f = schedule.step(n)
        prev = entries[-1]
        vals = tuple(prev.at(f.table[b]) * (1 + params.r) for b in range(1 << (n + 1)))
        rv = RandomVariable(n + 1, vals)
        assert all(v == vals[0] for v in vals), "bond recursion lost constancy"
        entries.append(rv)
    return AdaptedProcess(tuple(entries))


def discounted_stock(stock: AdaptedProcess, bond: AdaptedProcess) -> AdaptedProcess:
    return AdaptedProcess(tuple(
        RandomVariable(n, tuple(s / b for s, b in zip(stock[n].values, bond[n].values)))
        for n in range(stock.horizon + 1)
    ))


@dataclass(frozen=True)
class Strategy:
    """Holdings decided one step ahead: phi[n-1], psi[n-1] live on level n-1
    and are the stock/bond positions carried into time n (n = 1…T)."""

    phi: tuple
    psi: tuple

    def __post_init__(self):
        if len(self.phi) != len(self.psi):
            raise BinfiltError("phi and psi must have the same length")
        for i, (p, q) in enumerate(zip(self.phi, self.psi)):
            if p.level != i or q.level != i:
                raise LevelMismatchError(
                    f"holdings into time {i + 1} must live on level {i}"
                )

    @property
    def horizon(self) -> int:
        return len(self.phi)

    def phi_into(self, n: int) -> RandomVariable:
        """phi_n, the stock position carried into time n (on level n-1)."""
        return self.phi[n - 1]

    def psi_into(self, n: int) -> RandomVariable:
        return self.psi[n - 1]

    @classmethod
    def zero(cls, horizon: int, exact: bool = False) -> "Strategy":
        z = zero(exact)
        return cls(
            tuple(RandomVariable.constant(n, z) for n in range(horizon)),
            tuple(RandomVariable.constant(n, z) for n in range(horizon)),
        )

    def to_rows(self) -> list[tuple[int, str, Number, Number]]:
        rows = []
        for n in range(1, self.horizon + 1):
            for i in range(1 << (n - 1)):
                rows.append((
                    n, str(BinWord(n - 1, i)),
                    self.phi[n - 1].at(i), self.psi[n - 1].at(i),
                ))
        return rows


def value_process(strategy: Strategy, stock: AdaptedProcess, bond: AdaptedProcess,
                  schedule) -> AdaptedProcess:
    """Portfolio value: V_0 = S_0 phi_1 + b_0 psi_1;
    V_n = S_n (phi_n o f_{n-1}) + b_n (psi_n o f_{n-1})."""
    T = schedule.horizon
    if strategy.horizon < T:
        raise LevelMismatchError(
            f"strategy horizon {strategy.horizon} shorter than schedule horizon {T}"
        )
    entries = [stock[0] * strategy.phi_into(1) + bond[0] * strategy.psi_into(1)]
    for n in range(1, T + 1):
        f = schedule.step(n - 1)
        phi_n = import_via(f, strategy.phi_into(n))
        psi_n = import_via(f, strategy.psi_into(n))
        entries.append(stock[n] * phi_n + bond[n] * psi_n)
    return AdaptedProcess(tuple(entries))


def gain_process(strategy: Strategy, stock: AdaptedProcess, bond: AdaptedProcess,
                 schedule, exact: bool = False) -> AdaptedProcess:
    """Cash thrown off by rebalancing; the terminal step liquidates
    (holdings into time T+1 are zero by convention, so G_T is the
    liquidation value)."""
    T = schedule.horizon
    values = value_process(strategy, stock, bond, schedule)
    entries = [-values[0]]
    for n in range(1, T + 1):
        if n < T:
            next_cost = stock[n] * strategy.phi_into(n + 1) + bond[n] * strategy.psi_into(n + 1)
        else:
            next_cost = RandomVariable.constant(n, zero(exact))
        entries.append(values[n] - next_cost)
    return AdaptedProcess(tuple(entries))


@dataclass(frozen=True)
class SelfFinancingReport:
    entries: tuple  # (n, max deviation, worst atom)
    tol: float

    @property
    def is_self_financing(self) -> bool:
        return all(d <= self.tol for _, d, _ in self.entries)

    def to_dict(self) -> dict:
        return {
            "is_self_financing": self.is_self_financing,
            "tol": as_float(self.tol),
            "steps": [
                {"n": n, "max_deviation": as_float(d), "worst_atom": w}
                for n, d, w in self.entries
            ],
        }


def is_self_financing(strategy: Strategy, stock: AdaptedProcess, bond: AdaptedProcess,
                      schedule, tol) -> SelfFinancingReport:
    """Check S_n phi_{n+1} + b_n psi_{n+1} = V_n atomwise for n = 1…T-1."""
    values = value_process(strategy, stock, bond, schedule)
    entries = []
    for n in range(1, schedule.horizon):
        cost = stock[n] * strategy.phi_into(n + 1) + bond[n] * strategy.psi_into(n + 1)
        worst, worst_atom = 0.0, None
        for i in range(1 << n):
            dev = abs(cost.at(i) - values[n].at(i))
            if dev > worst:
                worst, worst_atom = dev, str(BinWord(n, i))
        entries.append((n, worst, worst_atom))
    return SelfFinancingReport(tuple(entries), tol)


@dataclass(frozen=True)
class ArbitrageCertificate:
    """A strategy plus the evidence that it satisfies the arbitrage definition
    up to the materialized horizon."""

    strategy: Strategy
    regime: str                      # "long" (r <= mu - sigma) or "short" (r >= mu + sigma)
    min_gain: float                  # min over all steps/atoms of the gain
    positive_step: int | None        # first step with P(G > 0) > 0
    positive_prob: float             # that probability (0.0 when none exists)
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "min_gain": self.min_gain,
            "positive_step": self.positive_step,
            "positive_prob": self.positive_prob,
            "note": self.note,
        }


def construct_arbitrage(params: MarketParams, schedule,
                        measures: Sequence[FiniteMeasure] | None = None):
    """Outside the band |mu - r| < sigma, return the explicit zero-cost
    arbitrage; inside it return None.

    Long the stock (phi = +1) when r <= mu - sigma, short it (phi = -1) when
    r >= mu + sigma, always funding with psi = -(S_n/b_n) phi. The gain at
    time n is then (mu + sigma*xi_n - r) * (S_{n-1} phi_n o f_{n-1}), which is
    non-negative in either regime. The phi magnitude is fixed at 1: scale does
    not affect the arbitrage property and determinism helps testing.
    """
    if params.r <= params.mu - params.sigma:
        sign, regime = 1, "long"
    elif params.r >= params.mu + params.sigma:
        sign, regime = -1, "short"
    else:
        return None
    one = to_number(1, params.exact)
    stock = stock_process(params, schedule)
    bond = bond_process(params, schedule)
    phi, psi = [], []
    for n in range(schedule.horizon):
        phi_n = RandomVariable.constant(n, sign * one)
        psi.append(RandomVariable(
            n, tuple(-(stock[n].at(i) / bond[n].at(i)) * phi_n.at(i) for i in range(1 << n))
        ))
        phi.append(phi_n)
    strategy = Strategy(tuple(phi), tuple(psi))
    gains = gain_process(strategy, stock, bond, schedule, params.exact)
    min_gain = min(min(gains[n].values) for n in range(schedule.horizon + 1))
    positive_step, positive_prob = _first_positive_gain(gains, measures, schedule.horizon)
    note = None
    if positive_step is None:
        note = ("no step has positive gain with positive probability at this horizon; "
                "the sequence of up-move probabilities may be trivial")
    return ArbitrageCertificate(
        strategy, regime, as_float(min_gain), positive_step, positive_prob, note
    )


def _first_positive_gain(gains: AdaptedProcess, measures, horizon: int):
    if measures is None:
        return None, 0.0
    for n in range(horizon + 1):
        prob = sum(
            (measures[n].weight_at(i) for i in range(1 << n) if gains[n].at(i) > 0),
            start=0,
        )
        if prob > 0:
            return n, as_float(prob)
    return None, 0.0


@dataclass(frozen=True)
class ArbitrageSearchResult:
    found: bool
    certificate: ArbitrageCertificate | None
    searched_family: str
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "searched_family": self.searched_family,
            "note": self.note,
        }


SEARCH_FAMILY = ("zero-cost sign strategies: phi in {-1, 0, +1} per atom, "
                 "psi = -(S/b) phi")


def detect_arbitrage_small(params: MarketParams, schedule,
                           measures: Sequence[FiniteMeasure],
                           t_max: int = 6) -> ArbitrageSearchResult:
    """Exhaustive arbitrage search over the zero-cost sign family.

    Zero-cost funding makes the gains decouple: the time-n gain depends only
    on the positions chosen at time n-1, atom by atom. An arbitrage therefore
    exists in the family iff a single (step, atom, sign) keeps both one-step
    gains non-negative on positive-mass moves with one strictly positive;
    per-atom enumeration of the three signs is the full search.
    """
    T = schedule.horizon
    if T > t_max:
        raise BinfiltError(f"exhaustive search capped at horizon {t_max}, got {T}")
    stock = stock_process(params, schedule)
    up_move = params.mu + params.sigma - params.r
    down_move = params.mu - params.sigma - params.r
    exact = params.exact
    one = to_number(1, exact)

    phi = [[zero(exact)] * (1 << n) for n in range(T)]
    hit = None  # (step into which the position is carried, parent atom)
    for n in range(T):
        if hit is not None:
            break
        f = schedule.step(n)
        for a in range(1 << n):
            if measures[n].is_null_atom_index(a):
                continue
            s = stock[n].at(a)
            for sign in (one, -one):
                ok = True
                strict = False
                for b in f.preimage_indices(a):
                    if measures[n + 1].is_null_atom_index(b):
                        continue
                    move = up_move if (b & 1) else down_move
                    g = move * s * sign
                    if g < 0:
                        ok = False
                        break
                    if g > 0:
                        strict = True
                if ok and strict:
                    phi[n][a] = sign
                    hit = (n + 1, a)
                    break
            if hit is not None:
                break
    if hit is None:
        return ArbitrageSearchResult(False, None, SEARCH_FAMILY)

    phi_rvs = tuple(RandomVariable(n, tuple(v)) for n, v in enumerate(phi))
    bond = bond_process(params, schedule)
    psi_rvs = tuple(
        RandomVariable(n, tuple(
            -(stock[n].at(i) / bond[n].at(i)) * phi_rvs[n].at(i) for i in range(1 << n)
        ))
        for n in range(T)
    )
    strategy = Strategy(phi_rvs, psi_rvs)
    gains = gain_process(strategy, stock, bond, schedule, exact)
    min_gain = min(
        min((gains[n].at(i) for i in range(1 << n)
             if not measures[n].is_null_atom_index(i)), default=zero(exact))
        for n in range(T + 1)
    )
    step, prob = _first_positive_gain(gains, measures, T)
    cert = ArbitrageCertificate(strategy, "search", as_float(min_gain), step, prob)
    return ArbitrageSearchResult(True, cert, SEARCH_FAMILY)
