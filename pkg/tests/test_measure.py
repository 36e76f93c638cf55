import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from binfilt.binword import BinWord, enumerate_words
from binfilt.errors import BinfiltError, LevelMismatchError
from binfilt.measure import FiniteMeasure, ProbSequence, product_measure, product_measures

W = BinWord.from_string


def brute_force_product_weight(p_values, word):
    """Independent oracle: evaluate the defining product digit by digit."""
    out = 1.0
    for i, ch in enumerate(str(word), start=1):
        pi = p_values[i - 1]
        out *= pi if ch == "1" else (1 - pi)
    return out


def test_uniform_two_steps():
    m = product_measure(ProbSequence.constant(0.5, 2), 2)
    assert m.weights == (0.25, 0.25, 0.25, 0.25)


def test_degenerate_p_concentrates():
    m = product_measure(ProbSequence.from_values([1.0]), 1)
    assert m.weight(W("1")) == 1.0
    assert m.weight(W("0")) == 0.0


def test_product_weight_example():
    m = product_measure(ProbSequence.from_values([0.3, 0.6]), 2)
    assert m.weight(W("10")) == pytest.approx(0.3 * 0.4)
    assert sum(m.weights) == pytest.approx(1.0)


def test_product_weights_match_oracle():
    rng = random.Random(7)
    p = [rng.random() for _ in range(5)]
    m = product_measure(ProbSequence.from_values(p), 5)
    for w in enumerate_words(5):
        assert m.weight(w) == pytest.approx(brute_force_product_weight(p, w), abs=1e-14)


def test_zero_power_zero_convention_allows_degenerate_p():
    # p_i in {0, 1} must be legal; the empty-exponent factor counts as 1
    m = product_measure(ProbSequence.from_values([0.0, 1.0, 0.5]), 3)
    assert m.weight(W("010")) == 0.5
    assert m.weight(W("011")) == 0.5
    assert sum(m.weights) == 1.0


def test_weights_sum_to_one_at_scale():
    rng = random.Random(42)
    p = ProbSequence.from_values([rng.random() for _ in range(20)])
    for n in (5, 11, 16, 20):
        m = product_measure(p, n)
        assert abs(sum(m.weights) - 1.0) <= 1e-12


def test_exact_mode_sums_exactly():
    p = ProbSequence.from_values(["3/10", "1/7", "2/3"], exact=True)
    m = product_measure(p, 3)
    assert sum(m.weights) == Fraction(1)
    assert m.weight(W("101")) == Fraction(3, 10) * Fraction(6, 7) * Fraction(2, 3)


def test_event_prob():
    m = product_measure(ProbSequence.constant(0.5, 2), 2)
    assert m.event_prob({W("00"), W("11")}) == pytest.approx(0.5)
    assert m.event_prob(set()) == 0
    m2 = product_measure(ProbSequence.from_values([0.3, 0.6]), 2)
    assert m2.event_prob({W("10"), W("11")}) == pytest.approx(0.3)


def test_event_prob_rejects_level_mismatch():
    m = product_measure(ProbSequence.constant(0.5, 2), 2)
    with pytest.raises(LevelMismatchError):
        m.event_prob({W("0")})


def test_is_null():
    assert product_measure(ProbSequence.from_values([1.0]), 1).is_null({W("0")})
    assert not product_measure(ProbSequence.constant(0.5, 1), 1).is_null({W("0")})
    m = product_measure(ProbSequence.from_values([0.5, 0.0]), 2)
    assert m.is_null({W("01"), W("11")})


def test_monotonicity_on_random_events():
    rng = random.Random(3)
    m = product_measure(ProbSequence.from_values([rng.random() for _ in range(6)]), 6)
    words = enumerate_words(6)
    for _ in range(50):
        b = {w for w in words if rng.random() < 0.5}
        a = {w for w in b if rng.random() < 0.5}
        assert m.event_prob(a) <= m.event_prob(b) + 1e-15


def test_tower_marginalization_consistency():
    # weight of a at level n equals the mass of {a0, a1} at level n+1
    rng = random.Random(11)
    p = ProbSequence.from_values([rng.random() for _ in range(8)])
    ms = product_measures(p, 8)
    for n in range(8):
        for a in enumerate_words(n):
            children = {a.append(0), a.append(1)}
            assert ms[n].weight(a) == pytest.approx(
                float(ms[n + 1].event_prob(children)), abs=1e-12
            )


def test_invariant_validation():
    with pytest.raises(BinfiltError):
        FiniteMeasure.from_weights(1, [0.7, 0.7])
    with pytest.raises(BinfiltError):
        FiniteMeasure.from_weights(1, [-0.1, 1.1])
    with pytest.raises(LevelMismatchError):
        FiniteMeasure.from_weights(2, [0.5, 0.5])


def test_prob_sequence_non_trivial_flag():
    assert ProbSequence.from_values([0.0, 1.0, 0.5]).non_trivial
    assert not ProbSequence.from_values([0.0, 1.0]).non_trivial
    with pytest.raises(BinfiltError):
        ProbSequence.from_values([1.5])


def test_csv_rows_round_trip():
    m = product_measure(ProbSequence.from_values([0.3, 0.6]), 2)
    rows = m.to_rows()
    assert rows[0] == ("00", pytest.approx(0.7 * 0.4))
    rebuilt = FiniteMeasure.from_weights(2, [v for _, v in rows])
    assert rebuilt.weights == m.weights


@given(st.lists(st.floats(0, 1), min_size=1, max_size=8))
def test_product_measure_always_normalized(p_values):
    m = product_measure(ProbSequence.from_values(p_values), len(p_values))
    assert abs(sum(m.weights) - 1.0) <= 1e-9


def test_from_rows_round_trip_and_validation():
    m = product_measure(ProbSequence.from_values([0.3, 0.6]), 2)
    rebuilt = FiniteMeasure.from_rows(2, m.to_rows())
    assert rebuilt.weights == m.weights
    with pytest.raises(BinfiltError, match="missing"):
        FiniteMeasure.from_rows(2, m.to_rows()[:3])
    with pytest.raises(BinfiltError, match="duplicate"):
        FiniteMeasure.from_rows(2, m.to_rows() + [("00", 0.1)])
    with pytest.raises(LevelMismatchError):
        FiniteMeasure.from_rows(1, m.to_rows())
