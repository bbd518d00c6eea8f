import pytest

from fmlocate.errors import DataError
from fmlocate.oracle import (
    naive_count,
    naive_locate,
    naive_suffix_array,
    sa_search_locate,
)
from fmlocate.textio import PackedText, Pattern


def P(s):
    return Pattern.from_string(s)


def test_toy_scan(toy):
    assert naive_locate(toy, P("ac")) == {0, 5}
    assert naive_locate(toy, P("gg")) == set()
    assert naive_locate(toy, P("acgtaacca")) == {0}


def test_toy_counts(toy):
    assert naive_count(toy, P("a")) == 4
    assert naive_count(toy, P("c")) == 3


def test_empty_pattern_rejected():
    with pytest.raises(DataError):
        P("")


def test_overlapping_occurrences():
    t = PackedText.from_string("aaaa")
    assert naive_locate(t, P("aa")) == {0, 1, 2}


def test_suffix_array_search_agrees(toy):
    sa = naive_suffix_array(toy)
    for s in ("a", "ac", "c", "gg", "cca", "acgtaacca", "t"):
        assert sa_search_locate(toy, sa, P(s)) == naive_locate(toy, P(s))
