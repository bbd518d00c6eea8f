import numpy as np

from fmlocate.oracle import naive_locate
from fmlocate.textio import PackedText, make_rng
from fmlocate.verify import (
    build_queries,
    find_failing_pattern,
    minimize,
    single_mismatch,
)


def test_query_set_matches_scan_oracle():
    rng = make_rng(2)
    t = PackedText(rng.integers(0, 4, size=400, dtype=np.uint8))
    q = build_queries(t, rng, n_absent=100)
    counts = q.expected_counts()
    assert q.size - q.n_present == 100
    assert np.all(counts[: q.n_present] >= 1) and np.all(counts[q.n_present:] == 0)
    for k in range(q.size):
        p = q.pattern(k)
        got = q.expect_pos[q.expect_offsets[k]:q.expect_offsets[k + 1]].tolist()
        assert got == sorted(naive_locate(t, p))
    distinct = {q.pattern(k) for k in range(q.size)}
    assert len(distinct) == q.size


def test_query_set_short_text():
    t = PackedText.from_string("ac")
    q = build_queries(t, make_rng(0), n_absent=5)
    present = {str(q.pattern(k)) for k in range(q.n_present)}
    assert present == {"a", "c", "ac"}


def test_fault_is_found_and_minimized():
    rng = make_rng(1)
    codes = rng.integers(0, 4, size=300, dtype=np.uint8)
    assert find_failing_pattern(codes, 4, "fmtree", 0) is None
    pattern = find_failing_pattern(codes, 4, "fmtree", 0, sep_bias=1)
    assert pattern is not None
    small = minimize(codes, pattern, 4, "fmtree", 0, sep_bias=1)
    assert small.size <= codes.size
    assert single_mismatch(small, pattern, 4, "fmtree", 0, sep_bias=1)
