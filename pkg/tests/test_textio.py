import numpy as np
import pytest

from fmlocate.errors import DataError
from fmlocate.oracle import naive_count
from fmlocate.textio import (
    PackedText,
    Pattern,
    RawText,
    decode,
    encode,
    extract_patterns,
    load_text,
    normalize,
    random_text,
)


def test_fasta_records_are_concatenated(tmp_path):
    f = tmp_path / "r.fa"
    f.write_bytes(b">r1\nACG\n>r2\nTA\n")
    raw = load_text(f, "fasta")
    assert raw.data == b"ACGTA"
    assert raw.source_format == "fasta"


def test_fasta_tolerates_crlf_and_leading_blank_lines(tmp_path):
    f = tmp_path / "r.fa"
    f.write_bytes(b"\n\n>r1 desc\r\nAC\r\nGT\r\n")
    assert load_text(f, "fasta").data == b"ACGT"


def test_plain_keeps_bytes_minus_trailing_newline(tmp_path):
    f = tmp_path / "t.txt"
    f.write_bytes(b"acgtaacca\n")
    assert load_text(f).data == b"acgtaacca"


@pytest.mark.parametrize("content,fmt", [(b"", "plain"), (b"\n", "plain"), (b"ACGT\n", "fasta"),
                                         (b">only header\n", "fasta")])
def test_bad_inputs_raise(tmp_path, content, fmt):
    f = tmp_path / "x"
    f.write_bytes(content)
    with pytest.raises(DataError):
        load_text(f, fmt)


def test_missing_file_raises(tmp_path):
    with pytest.raises(DataError):
        load_text(tmp_path / "nope")


def test_raw_text_must_be_non_empty():
    with pytest.raises(DataError):
        RawText(b"")


def test_normalize_toy():
    t = normalize(RawText(b"acgtaacca"), seed=123)
    assert t.n == 10
    assert t.sentinel_pos == 9
    assert t.codes.tolist() == [0, 1, 2, 3, 0, 0, 1, 1, 0]


def test_normalize_folds_case():
    assert np.array_equal(normalize(RawText(b"ACGT")).codes, normalize(RawText(b"acgt")).codes)


def test_normalize_randomizes_deterministically():
    a = normalize(RawText(b"nn"), seed=7)
    b = normalize(RawText(b"nn"), seed=7)
    assert a.codes.size == 2 and a.codes.max() <= 3
    assert np.array_equal(a.codes, b.codes)
    many = [normalize(RawText(b"N" * 64), seed=s).codes.tobytes() for s in range(4)]
    assert len(set(many)) > 1


def test_encode_decode_roundtrip():
    assert decode(encode("acgtACGT")) == "acgtacgt"
    with pytest.raises(DataError):
        encode("acn")


def test_pattern_rejects_empty_and_sentinel():
    with pytest.raises(DataError):
        Pattern.from_string("")
    with pytest.raises(DataError):
        Pattern.from_string("ac$")


def test_packed_text_decode_roundtrip():
    t = PackedText.from_string("gattaca")
    assert t.decode() == "gattaca"
    assert t.n == 8


def test_extract_single_valid_offset(toy):
    (p,) = extract_patterns(toy, 1, 9, seed=5)
    assert decode(p.codes) == "acgtaacca"


def test_extracted_patterns_occur():
    t = random_text(1000, 3)
    pats = extract_patterns(t, 10, 5, seed=11)
    assert len(pats) == 10
    assert all(len(p) == 5 and naive_count(t, p) >= 1 for p in pats)
    again = extract_patterns(t, 10, 5, seed=11)
    assert pats == again


def test_extract_rejects_too_long(toy):
    with pytest.raises(ValueError):
        extract_patterns(toy, 1, toy.n, seed=0)
