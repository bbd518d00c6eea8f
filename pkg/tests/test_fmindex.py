import io
import itertools
import struct
import zlib

import numpy as np
import pytest

from fmlocate.errors import (
    BadMagicError,
    ChecksumError,
    IndexFormatError,
    TruncatedIndexError,
    VersionMismatchError,
)
from fmlocate.fmindex import (
    HEADER,
    SUBSCRIPT,
    VALUE,
    SARange,
    backward_search,
    build_index,
    count,
    deserialize,
    from_bytes,
    lf,
    serialize,
    to_bytes,
)
from fmlocate.locate import FMTreeLocator, OriginalLocator
from fmlocate.oracle import naive_count, naive_suffix_array
from fmlocate.suffix import build_suffix_array
from fmlocate.textio import PackedText, Pattern, make_rng


def P(s):
    return Pattern.from_string(s)


@pytest.fixture(scope="module")
def toy_v(toy):
    return build_index(toy, 3, VALUE)


@pytest.fixture(scope="module")
def toy_s(toy):
    return build_index(toy, 3, SUBSCRIPT)


def test_value_sampling_toy(toy_v):
    assert toy_v.sampled.ssa.tolist() == [9, 0, 6, 3]
    assert toy_v.sampled.marks.to_bools().astype(int).tolist() == [1, 0, 0, 0, 1, 0, 1, 0, 0, 1]


def test_subscript_sampling_toy(toy_s):
    assert toy_s.sampled.ssa.tolist() == [9, 5, 6, 3]
    assert toy_s.sampled.marks is None


def test_d_below_two_rejected(toy):
    with pytest.raises(ValueError):
        build_index(toy, 1, VALUE)


def test_lf_toy(toy_v):
    assert lf(toy_v, 0) == 1
    assert lf(toy_v, toy_v.sentinel_row) == 0
    with pytest.raises(IndexError):
        lf(toy_v, toy_v.n)


def test_lf_property_random():
    rng = make_rng(4)
    for _ in range(5):
        t = PackedText(rng.integers(0, 4, size=int(rng.integers(1, 2000)), dtype=np.uint8))
        ix = build_index(t, 4, VALUE)
        sa = build_suffix_array(t).entries.astype(np.int64)
        for l in range(t.n):
            if sa[l] > 0:
                assert sa[lf(ix, l)] == sa[l] - 1


def test_lf_walk_reconstructs_text(toy_v):
    # walking from row 0 visits SA values n-1, n-2, ..., 0
    sa = naive_suffix_array(PackedText.from_string("acgtaacca"))
    row, seen = 0, []
    for _ in range(toy_v.n):
        seen.append(int(sa[row]))
        row = lf(toy_v, row)
    assert seen == list(range(toy_v.n - 1, -1, -1))


def test_backward_search_toy(toy_v):
    rng, pen = backward_search(toy_v, P("ac"))
    assert rng == SARange(3, 4) and pen == SARange(5, 7)
    rng, pen = backward_search(toy_v, P("a"))
    assert rng == SARange(1, 4) and pen == SARange(0, toy_v.n - 1)
    assert backward_search(toy_v, P("gg"))[0].empty


def test_count_toy(toy_v, toy_s):
    for ix in (toy_v, toy_s):
        assert count(ix, P("a")) == 4
        assert count(ix, P("acgtaacca")) == 1
        assert count(ix, P("gg")) == 0


def test_range_extends_penult(toy_v):
    for s in ("ac", "ca", "cca", "aacc", "gta"):
        rng, pen = backward_search(toy_v, P(s))
        assert backward_search(toy_v, P(s[1:]))[0] == pen
        c = "acgt".index(s[0])
        C = toy_v.C
        assert rng.sp == C[c + 1] + toy_v.bwt.rank(c, pen.sp)
        assert rng.ep == C[c + 1] + toy_v.bwt.rank(c, pen.ep + 1) - 1


def test_count_matches_oracle_random():
    rng = make_rng(8)
    for _ in range(10):
        t = PackedText(rng.integers(0, 4, size=int(rng.integers(1, 3000)), dtype=np.uint8))
        ix = build_index(t, int(rng.integers(2, 9)), VALUE)
        for _ in range(50):
            L = int(rng.integers(1, 13))
            p = Pattern(rng.integers(0, 4, size=L, dtype=np.uint8))
            assert count(ix, p) == naive_count(t, p)


def all_patterns(max_len):
    for L in range(1, max_len + 1):
        for tup in itertools.product("acgt", repeat=L):
            yield P("".join(tup))


@pytest.mark.parametrize("strategy", [VALUE, SUBSCRIPT])
def test_roundtrip_toy_exhaustive(toy, strategy):
    ix = build_index(toy, 3, strategy, seed=42)
    blob = to_bytes(ix)
    back = from_bytes(blob)
    assert to_bytes(back) == blob
    assert back.seed == 42 and back.strategy == strategy
    a, b = OriginalLocator(ix), OriginalLocator(back)
    for p in all_patterns(4):
        assert count(ix, p) == count(back, p)
        assert sorted(a.locate(p).positions) == sorted(b.locate(p).positions)
    if strategy == VALUE:
        fa, fb = FMTreeLocator(ix), FMTreeLocator(back)
        for p in all_patterns(4):
            assert np.array_equal(fa.locate(p).positions, fb.locate(p).positions)


def test_serialize_to_stream_reports_size(toy_v):
    buf = io.BytesIO()
    size = serialize(toy_v, buf)
    assert size == len(buf.getvalue())
    buf.seek(0)
    assert to_bytes(deserialize(buf)) == buf.getvalue()


def test_header_layout(toy_v):
    blob = to_bytes(toy_v)
    magic, version, n, D, strat, srow, seed, *C = HEADER.unpack_from(blob)
    assert (magic, version, n, D, strat, srow) == (b"FMTI", 1, 10, 3, 0, 4)
    assert C == [0, 1, 5, 8, 9]
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    assert crc == zlib.crc32(blob[:-4])


def _recrc(blob):
    return blob[:-4] + struct.pack("<I", zlib.crc32(blob[:-4]))


def test_corruptions_raise_typed_errors(toy_v):
    blob = bytearray(to_bytes(toy_v))
    with pytest.raises(BadMagicError):
        from_bytes(b"XXXX" + bytes(blob[4:]))
    bumped = bytearray(blob)
    struct.pack_into("<I", bumped, 4, 2)
    with pytest.raises(VersionMismatchError):
        from_bytes(bytes(bumped))
    with pytest.raises(TruncatedIndexError):
        from_bytes(bytes(blob[:-10]))
    with pytest.raises(TruncatedIndexError):
        from_bytes(bytes(blob[:20]))
    flipped = bytearray(blob)
    flipped[HEADER.size + 3] ^= 0x10
    with pytest.raises(ChecksumError):
        from_bytes(bytes(flipped))
    with pytest.raises(IndexFormatError):
        from_bytes(bytes(blob) + b"\0")
    with pytest.raises(BadMagicError):
        from_bytes(b"")


def test_consistent_crc_but_inconsistent_content(toy_v):
    blob = bytearray(to_bytes(toy_v))
    struct.pack_into("<Q", blob, 21, 0)  # sentinel_row -> 0, a row that is not SA = 0
    with pytest.raises(IndexFormatError):
        from_bytes(_recrc(bytes(blob)))


@pytest.mark.parametrize("seed", range(20))
def test_random_byte_flip_never_loads_silently(toy_v, seed):
    blob = bytearray(to_bytes(toy_v))
    rng = make_rng(seed)
    pos = int(rng.integers(0, len(blob)))
    blob[pos] ^= 1 << int(rng.integers(0, 8))
    with pytest.raises(IndexFormatError):
        from_bytes(bytes(blob))


def test_index_is_position_width_32(toy_v):
    assert toy_v.sampled.ssa.dtype == np.uint32
