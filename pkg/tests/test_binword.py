import pytest
from hypothesis import given, strategies as st

from binfilt.binword import MAX_LEVEL, BinWord, enumerate_words
from binfilt.errors import BinfiltError, CapacityError


def test_empty_level_is_singleton():
    words = enumerate_words(0)
    assert words == [BinWord.empty()]
    assert str(words[0]) == ""


def test_level_two_enumeration_order():
    assert [str(w) for w in enumerate_words(2)] == ["00", "01", "10", "11"]


def test_index_matches_bit_arithmetic_oracle():
    # independent oracle: the index of a word is its base-2 reading
    words = enumerate_words(3)
    assert len(words) == 8
    assert str(words[5]) == "101"
    for w in words:
        assert w.index == int(str(w), 2)


def test_enumeration_is_a_bijection():
    for n in range(6):
        words = enumerate_words(n)
        assert len(set(words)) == 1 << n
        assert [w.index for w in words] == list(range(1 << n))


def test_capacity_error_names_bound():
    with pytest.raises(CapacityError, match=str(MAX_LEVEL)):
        enumerate_words(MAX_LEVEL + 1)
    with pytest.raises(CapacityError):
        enumerate_words(5, limit=4)


def test_append():
    assert str(BinWord.empty().append(1)) == "1"
    assert str(BinWord.from_string("10").append(0)) == "100"
    assert str(BinWord.from_string("0110").append(1)) == "01101"


def test_append_rejects_bad_digit():
    with pytest.raises(BinfiltError):
        BinWord.empty().append(2)


def test_digit_count():
    assert BinWord.from_string("0110").digit_count(1) == 2
    assert BinWord.empty().digit_count(0) == 0
    assert BinWord.from_string("11111").digit_count(0) == 0


def test_digit_extraction_is_one_indexed_from_left():
    w = BinWord.from_string("0110")
    assert [w.digit(k) for k in (1, 2, 3, 4)] == [0, 1, 1, 0]
    assert w.last_digit == 0


def test_truncate_drops_last_digit():
    assert str(BinWord.from_string("101").truncate()) == "10"
    with pytest.raises(BinfiltError):
        BinWord.empty().truncate()


@given(st.text(alphabet="01", max_size=MAX_LEVEL))
def test_string_round_trip(s):
    assert str(BinWord.from_string(s)) == s


@given(st.integers(0, 12), st.integers(), st.integers(0, 1))
def test_append_is_injective(n, seed, d):
    w = BinWord(n, seed % (1 << n) if n else 0)
    ww = w.append(d)
    assert ww.truncate() == w
    assert ww.last_digit == d


@given(st.text(alphabet="01", max_size=20))
def test_digit_counts_partition_length(s):
    w = BinWord.from_string(s)
    assert w.digit_count(0) + w.digit_count(1) == w.length
