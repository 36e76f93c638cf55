import random
from fractions import Fraction

import pytest

from binfilt.binword import BinWord, enumerate_words
from binfilt.condexp import RandomVariable, import_via
from binfilt.errors import BinfiltError
from binfilt.filtration import classical_schedule, drop_k_schedule, elderly_schedule
from binfilt.market import (
    MarketParams,
    Strategy,
    bond_process,
    construct_arbitrage,
    detect_arbitrage_small,
    discounted_stock,
    gain_process,
    is_self_financing,
    stock_process,
    value_process,
)
from binfilt.measure import ProbSequence, product_measures

W = BinWord.from_string


class TestParams:
    def test_invariants(self):
        with pytest.raises(BinfiltError):
            MarketParams.create(0.0, -0.5, 0.0, 1.0)
        with pytest.raises(BinfiltError):
            MarketParams.create(-0.6, 0.5, 0.0, 1.0)  # mu <= sigma - 1
        with pytest.raises(BinfiltError):
            MarketParams.create(0.0, 0.5, -1.0, 1.0)
        with pytest.raises(BinfiltError):
            MarketParams.create(0.0, 0.5, 0.0, 0.0)

    def test_exact_mode(self):
        p = MarketParams.create("1/10", "1/2", 0, 1, exact=True)
        assert p.up_factor == Fraction(8, 5)
        assert p.down_factor == Fraction(3, 5)


class TestStockProcess:
    def test_one_step_by_hand(self):
        params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
        s = stock_process(params, classical_schedule(1))
        assert s[1](W("1")) == pytest.approx(1.5)
        assert s[1](W("0")) == pytest.approx(0.5)

    def test_drop_recursion_goes_through_placeholder(self):
        params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
        s = stock_process(params, drop_k_schedule(2, 1))
        # the level-2 price restarts from the placeholder state "0"
        assert s[2](W("11")) == pytest.approx(0.75)
        assert s[2](W("01")) == pytest.approx(0.75)
        assert s[2](W("10")) == pytest.approx(0.25)
        assert s[2](W("00")) == pytest.approx(0.25)

    def test_classical_matches_closed_form(self):
        params = MarketParams.create(0.05, 0.3, 0.02, 2.0)
        s = stock_process(params, classical_schedule(5))
        for w in enumerate_words(5):
            ups = w.digit_count(1)
            expected = 2.0 * params.up_factor ** ups * params.down_factor ** (5 - ups)
            assert s[5](w) == pytest.approx(expected)

    def test_positivity(self):
        rng = random.Random(0)
        for _ in range(20):
            sigma = rng.uniform(0.05, 1.5)
            mu = rng.uniform(sigma - 1 + 1e-6, 1.0)
            params = MarketParams.create(mu, sigma, rng.uniform(-0.5, 0.5), rng.uniform(0.1, 5))
            sched = drop_k_schedule(4, rng.randint(1, 3))
            s = stock_process(params, sched)
            assert all(min(s[n].values) > 0 for n in range(5))


class TestBondProcess:
    def test_zero_rate(self):
        params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
        b = bond_process(params, classical_schedule(3))
        assert all(set(b[n].values) == {1.0} for n in range(4))

    def test_closed_form(self):
        params = MarketParams.create(0.0, 0.5, 0.1, 1.0)
        b = bond_process(params, classical_schedule(2))
        assert b[2].values == (pytest.approx(1.21),) * 4

    def test_constant_through_drop_schedule(self):
        params = MarketParams.create(0.0, 0.5, 0.05, 1.0)
        b = bond_process(params, drop_k_schedule(3, 2))
        assert b[3].values == (pytest.approx(1.157625),) * 8


def buy_and_hold(params, sched):
    """One share bought at time 0 and held; no bond."""
    T = sched.horizon
    one = RandomVariable.constant
    return Strategy(
        tuple(one(n, 1.0) for n in range(T)),
        tuple(one(n, 0.0) for n in range(T)),
    )


class TestValueAndGain:
    def setup_method(self):
        self.params = MarketParams.create(0.1, 0.4, 0.05, 1.0)
        self.sched = classical_schedule(3)
        self.stock = stock_process(self.params, self.sched)
        self.bond = bond_process(self.params, self.sched)

    def test_zero_strategy(self):
        z = Strategy.zero(3)
        v = value_process(z, self.stock, self.bond, self.sched)
        g = gain_process(z, self.stock, self.bond, self.sched)
        assert all(set(v[n].values) == {0.0} for n in range(4))
        assert all(set(g[n].values) == {0.0} for n in range(4))

    def test_single_share_values(self):
        s = buy_and_hold(self.params, self.sched)
        v = value_process(s, self.stock, self.bond, self.sched)
        assert v[0].at(0) == pytest.approx(1.0)
        assert v[1].values == pytest.approx(self.stock[1].values)

    def test_offsetting_portfolio_has_zero_value(self):
        phi1 = RandomVariable.constant(0, 1.0)
        psi1 = RandomVariable.constant(0, -1.0)  # s0/b0 = 1
        strat = Strategy(
            (phi1,) + tuple(RandomVariable.constant(n, 0.0) for n in (1, 2)),
            (psi1,) + tuple(RandomVariable.constant(n, 0.0) for n in (1, 2)),
        )
        v = value_process(strat, self.stock, self.bond, self.sched)
        assert v[0].at(0) == pytest.approx(0.0)

    def test_buy_and_hold_gains(self):
        s = buy_and_hold(self.params, self.sched)
        g = gain_process(s, self.stock, self.bond, self.sched)
        assert g[0].at(0) == pytest.approx(-1.0)          # cash paid for the share
        # intermediate rebalances are self-financed (same holdings), so no cash
        for n in (1, 2):
            assert g[n].values == pytest.approx((0.0,) * (1 << n))
        # terminal step liquidates
        assert g[3].values == pytest.approx(self.stock[3].values)

    def test_self_financing_detection(self):
        hold = buy_and_hold(self.params, self.sched)
        assert is_self_financing(hold, self.stock, self.bond, self.sched, 1e-12).is_self_financing

        # fund the share at time 1 without adjusting the bond leg: not self-financing
        phi = tuple(RandomVariable.constant(n, 1.0) for n in range(3))
        psi = (RandomVariable.constant(0, 0.0), RandomVariable.constant(1, 1.0),
               RandomVariable.constant(2, 0.0))
        report = is_self_financing(Strategy(phi, psi), self.stock, self.bond, self.sched, 1e-12)
        assert not report.is_self_financing

    def test_gain_telescoping_for_self_financing(self):
        # for a self-financing strategy the accumulated gains equal
        # liquidation value minus initial cost
        sched = drop_k_schedule(3, 1)
        stock = stock_process(self.params, sched)
        bond = bond_process(self.params, sched)
        hold = buy_and_hold(self.params, sched)
        g = gain_process(hold, stock, bond, sched)
        v = value_process(hold, stock, bond, sched)
        total = RandomVariable.constant(3, 0.0)
        for n in range(4):
            total = total + import_via(sched.composite(n, 3), g[n])
        expected = v[3] - import_via(sched.composite(0, 3), v[0])
        assert total.max_abs_diff(expected) < 1e-12


class TestSinglePeriodBalance:
    def test_zero_cost_portfolio_growth_identity(self):
        # if S_n phi + b_n psi = 0 then next-period wealth is
        # (mu + sigma xi - r) times the stock leg, on either schedule kind
        rng = random.Random(8)
        params = MarketParams.create(0.07, 0.35, 0.01, 1.3)
        for sched in (classical_schedule(8), drop_k_schedule(8, 3)):
            stock = stock_process(params, sched)
            bond = bond_process(params, sched)
            for n in range(8):
                phi = RandomVariable(n, tuple(rng.uniform(-2, 2) for _ in range(1 << n)))
                psi = RandomVariable(n, tuple(
                    -stock[n].at(i) / bond[n].at(i) * phi.at(i) for i in range(1 << n)
                ))
                f = sched.step(n)
                lhs = stock[n + 1] * import_via(f, phi) + bond[n + 1] * import_via(f, psi)
                for b in enumerate_words(n + 1):
                    xi = 2 * b.last_digit - 1
                    factor = params.mu + params.sigma * xi - params.r
                    stake = stock[n](f(b)) * phi(f(b))
                    assert lhs(b) == pytest.approx(factor * stake, abs=1e-12)


class TestConstructArbitrage:
    def test_band_violation_low_rate(self):
        params = MarketParams.create(0.6, 0.5, 0.0, 1.0)   # r <= mu - sigma
        sched = classical_schedule(3)
        ms = product_measures(ProbSequence.constant(0.5, 3), 3)
        cert = construct_arbitrage(params, sched, ms)
        assert cert is not None and cert.regime == "long"
        assert cert.min_gain >= 0
        assert cert.positive_step is not None and cert.positive_prob > 0
        # gains on up-moves are (mu + sigma - r) * S_{n-1}
        stock = stock_process(params, sched)
        bond = bond_process(params, sched)
        g = gain_process(cert.strategy, stock, bond, sched)
        for b in enumerate_words(2):
            if b.last_digit == 1:
                parent = sched.step(1)(b)
                assert g[2](b) == pytest.approx(1.1 * stock[1](parent))

    def test_inside_band_returns_none(self):
        params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
        assert construct_arbitrage(params, classical_schedule(2)) is None

    def test_band_violation_high_rate(self):
        params = MarketParams.create(-0.4, 0.3, 0.0, 1.0)  # r >= mu + sigma
        sched = classical_schedule(3)
        ms = product_measures(ProbSequence.constant(0.5, 3), 3)
        cert = construct_arbitrage(params, sched, ms)
        assert cert is not None and cert.regime == "short"
        assert cert.min_gain >= 0
        assert cert.positive_prob > 0

    def test_trivial_p_still_non_negative_but_flagged(self):
        # boundary r = mu - sigma: down-moves gain nothing, and all mass sits
        # on the all-down path, so no step ever gains with positive probability
        params = MarketParams.create(0.5, 0.5, 0.0, 1.0)
        sched = classical_schedule(2)
        ms = product_measures(ProbSequence.constant(0.0, 2), 2)
        cert = construct_arbitrage(params, sched, ms)
        assert cert.min_gain >= 0
        assert cert.positive_step is None
        assert cert.note is not None


class TestDetectArbitrageSmall:
    def test_none_inside_band_with_interior_p(self):
        rng = random.Random(21)
        for _ in range(5):
            sigma = rng.uniform(0.2, 0.8)
            mu = rng.uniform(-0.2, 0.2)
            r = rng.uniform(mu - sigma + 0.01, mu + sigma - 0.01)
            params = MarketParams.create(mu, sigma, r, 1.0)
            sched = classical_schedule(3)
            ms = product_measures(
                ProbSequence.from_values([rng.uniform(0.1, 0.9) for _ in range(3)]), 3
            )
            result = detect_arbitrage_small(params, sched, ms)
            assert not result.found

    def test_finds_certificate_outside_band(self):
        params = MarketParams.create(0.6, 0.5, 0.0, 1.0)
        sched = classical_schedule(3)
        ms = product_measures(ProbSequence.constant(0.5, 3), 3)
        result = detect_arbitrage_small(params, sched, ms)
        assert result.found
        cert = result.certificate
        assert cert.min_gain >= 0
        assert cert.positive_prob > 0

    def test_degenerate_p_creates_family_arbitrage_inside_band(self):
        # a sure up-move with mu + sigma > r is exploitable even though
        # |mu - r| < sigma; the necessity bound needs a non-trivial filtration
        params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
        sched = classical_schedule(2)
        ms = product_measures(ProbSequence.from_values([1.0, 1.0]), 2)
        result = detect_arbitrage_small(params, sched, ms)
        assert result.found

    def test_capacity_guard(self):
        params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
        sched = classical_schedule(7)
        ms = product_measures(ProbSequence.constant(0.5, 7), 7)
        with pytest.raises(BinfiltError):
            detect_arbitrage_small(params, sched, ms)


def test_discounted_stock_values():
    params = MarketParams.create(0.1, 0.3, 0.05, 2.0)
    sched = classical_schedule(2)
    sp = discounted_stock(stock_process(params, sched), bond_process(params, sched))
    assert sp[0].at(0) == pytest.approx(2.0)
    assert sp[2](W("11")) == pytest.approx(2.0 * 1.4 ** 2 / 1.05 ** 2)


def test_elderly_schedule_processes_build():
    params = MarketParams.create(0.0, 0.5, 0.0, 1.0)
    sched = elderly_schedule(5, 2, 1)
    s = stock_process(params, sched)
    b = bond_process(params, sched)
    assert s.horizon == 5 and b.horizon == 5
    assert min(s[5].values) > 0
