import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fmlocate.errors import IndexFormatError
from fmlocate.fmindex import (
    SUBSCRIPT,
    VALUE,
    build_index,
    count,
    from_bytes,
    lf,
    to_bytes,
)
from fmlocate.locate import FMTreeLocator, OriginalLocator
from fmlocate.oracle import naive_count, naive_locate, naive_suffix_array
from fmlocate.rank import build_bit_rank
from fmlocate.suffix import build_suffix_array, derive_bwt
from fmlocate.textio import PackedText, Pattern

dna = st.text(alphabet="acgt", min_size=1, max_size=300)
small_dna = st.text(alphabet="acgt", min_size=1, max_size=12)
settings.register_profile("fm", deadline=None, max_examples=150,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fm")


@given(dna)
def test_suffix_array_matches_sort(s):
    t = PackedText.from_string(s)
    assert np.array_equal(build_suffix_array(t).entries.astype(np.int64), naive_suffix_array(t))


@given(dna, st.data())
def test_bwt_rank_matches_scan(s, data):
    t = PackedText.from_string(s)
    bwt = derive_bwt(t, build_suffix_array(t))
    ix = build_index(t, 2, VALUE)
    full = np.insert(bwt.codes.astype(np.int64), bwt.sentinel_row, -1)
    l = data.draw(st.integers(0, t.n))
    c = data.draw(st.integers(0, 3))
    assert ix.bwt.rank(c, l) == int(np.count_nonzero(full[:l] == c))


@given(st.lists(st.booleans(), min_size=1, max_size=2000), st.data())
def test_bit_rank_matches_scan(bits, data):
    B = build_bit_rank(bits)
    l = data.draw(st.integers(0, len(bits)))
    assert B.rank_one(l) == sum(bits[:l])


@given(dna, small_dna, st.integers(2, 8))
def test_count_matches_oracle(s, p, D):
    t = PackedText.from_string(s)
    P = Pattern.from_string(p)
    assert count(build_index(t, D, SUBSCRIPT), P) == naive_count(t, P)


@given(dna, small_dna, st.integers(2, 8), st.sampled_from([0, 1, 4, 16, None]), st.booleans())
def test_locate_engines_agree(s, p, D, threshold, early_stop):
    t = PackedText.from_string(s)
    P = Pattern.from_string(p)
    expected = naive_locate(t, P)
    iv = build_index(t, D, VALUE)
    isub = build_index(t, D, SUBSCRIPT)
    fm = FMTreeLocator(iv, threshold, early_stop=early_stop).locate(P)
    assert fm.as_set() == expected and len(fm) == len(expected)
    assert OriginalLocator(iv).locate(P).as_set() == expected
    assert OriginalLocator(isub).locate(P).as_set() == expected


@given(dna)
def test_lf_steps_back_one_position(s):
    t = PackedText.from_string(s)
    sa = naive_suffix_array(t)
    ix = build_index(t, 3, VALUE)
    for l in range(t.n):
        if sa[l] > 0:
            assert sa[lf(ix, l)] == sa[l] - 1
        else:
            assert lf(ix, l) == 0


@given(dna, st.sampled_from([VALUE, SUBSCRIPT]), st.data())
def test_damaged_stream_is_rejected(s, strategy, data):
    blob = bytearray(to_bytes(build_index(PackedText.from_string(s), 3, strategy)))
    mode = data.draw(st.sampled_from(["flip", "truncate", "extend"]))
    if mode == "flip":
        i = data.draw(st.integers(0, len(blob) - 1))
        blob[i] ^= 1 << data.draw(st.integers(0, 7))
    elif mode == "truncate":
        blob = blob[:data.draw(st.integers(0, len(blob) - 1))]
    else:
        blob += b"\x00"
    try:
        from_bytes(bytes(blob))
    except IndexFormatError:
        return
    raise AssertionError("damaged stream was accepted")
