from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sigtaylor.signature import signature
from sigtaylor.words import (WordPoly, basis_reduce, basis_reduce_closed, basis_words, count_01,
                             enumerate_words, format_word, parse_word, shuffle, shuffle_bruteforce,
                             shuffle_coefficient_sum, weight, weight_class_sizes, word_from_rank,
                             word_rank, words_with_weight, zero_blocks)

words_st = st.text(alphabet="01", max_size=5)


def test_enumeration_order():
    assert enumerate_words(2) == ["", "0", "1", "00", "01", "10", "11"]
    assert len(enumerate_words(6)) == 2 ** 7 - 1
    assert parse_word("e") == "" and format_word("") == "e"
    with pytest.raises(ValueError):
        parse_word("012")


@given(st.integers(0, 2 ** 12 - 2))
def test_rank_round_trip(r):
    assert word_rank(word_from_rank(r)) == r


def test_word_statistics():
    assert weight("0110") == 6
    assert count_01("0101") == 2
    assert zero_blocks("0110") == (1, 0, 1)
    assert zero_blocks("") == (0,)
    # weight classes grow like Fibonacci numbers
    assert list(weight_class_sizes(6)) == [1, 1, 2, 3, 5, 8, 13]
    assert words_with_weight(3) == ["01", "10", "111"]


def test_shuffle_examples():
    assert shuffle("01", "1").terms == {"011": (2,), "101": (1,)}
    assert shuffle("", "10") == WordPoly.word("10")
    assert shuffle("0", "1") == WordPoly({"01": 1, "10": 1})


@given(words_st, words_st)
@settings(max_examples=80, deadline=None)
def test_shuffle_matches_bruteforce(u, v):
    a = shuffle(u, v)
    assert a == shuffle_bruteforce(u, v)
    assert a == shuffle(v, u)
    total = sum(int(p[0]) for p in a.terms.values())
    assert total == shuffle_coefficient_sum(u, v)


@given(st.text(alphabet="01", max_size=3), st.text(alphabet="01", max_size=3),
       st.text(alphabet="01", max_size=2))
@settings(max_examples=40, deadline=None)
def test_shuffle_associative(u, v, w):
    assert shuffle(u, v).shuffle(WordPoly.word(w)) == WordPoly.word(u).shuffle(shuffle(v, w))


def test_basis_reduce_examples():
    # S_0 = T, S_00 = T^2/2, S_10 = T S_1 - S_01
    assert basis_reduce("0").terms == {"": (0, 1)}
    assert basis_reduce("00").terms == {"": (0, 0, Fraction(1, 2))}
    assert basis_reduce("10").terms == {"1": (0, 1), "01": (-1,)}
    assert basis_reduce("011") == WordPoly.word("011")
    for w in enumerate_words(6):
        red = basis_reduce(w)
        assert all(u == "" or u[-1] == "1" for u in red.words())


@pytest.mark.parametrize("w", enumerate_words(6))
def test_basis_reduce_closed_agrees(w):
    assert basis_reduce(w) == basis_reduce_closed(w)


def test_basis_reduce_numeric(paths):
    for X in paths:
        S = signature(X, 5)
        for w in enumerate_words(5):
            assert basis_reduce(w).evaluate(S) == pytest.approx(S[w], rel=1e-9, abs=1e-12)


def test_wordpoly_algebra():
    a = WordPoly({"1": 2, "0": Fraction(1, 3)})
    b = WordPoly({"1": -2})
    assert (a + b).terms == {"0": (Fraction(1, 3),)}
    assert (a - a) == WordPoly()
    assert a.times_T().coeff("1") == (0, 2)
    assert a.scale((1, 1)).coeff("1", T=2.0) == 6.0
    assert "T" in repr(a.times_T())
    assert a.to_dict() == {"0": ["1/3"], "1": ["2"]}
    assert basis_words(2) == ["", "1", "01", "11"]
