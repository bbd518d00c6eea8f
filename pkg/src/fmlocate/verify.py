"""Randomized oracle-equivalence checking shared by ``selftest`` and the tests.

For a text, the query set is every distinct substring of length 1..12 plus a
handful of random absent patterns.  Expected answers come from enumerating
the text windows directly, never from the index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvariantViolation
from .fmindex import SUBSCRIPT, VALUE, FmIndex, build_index, from_bytes, to_bytes
from .locate import (
    DRAIN,
    EARLY_LEAF,
    STAT_MAX_WALK,
    TREE,
    FMTreeLocator,
    OriginalLocator,
    search_many,
)
from .oracle import naive_locate
from .suffix import build_suffix_array
from .textio import PackedText, Pattern, decode, make_rng

log = logging.getLogger(__name__)

THRESHOLDS = (0, 4, 16, None)
MAX_PATTERN_LEN = 12


@dataclass
class QuerySet:
    flat: np.ndarray
    offsets: np.ndarray
    n_present: int
    # expected (pattern id, position) pairs sorted lexicographically
    expect_ids: np.ndarray
    expect_pos: np.ndarray
    expect_offsets: np.ndarray

    @property
    def size(self) -> int:
        return self.offsets.size - 1

    def pattern(self, k: int) -> Pattern:
        return Pattern(self.flat[self.offsets[k]:self.offsets[k + 1]])

    def expected_counts(self) -> np.ndarray:
        return np.diff(self.expect_offsets)


def build_queries(text: PackedText, rng: np.random.Generator, max_len: int = MAX_PATTERN_LEN,
                  n_absent: int = 100) -> QuerySet:
    codes = text.codes
    flats, lengths, ids, pos = [], [], [], []
    present_keys = set()
    base = 0
    for L in range(1, min(max_len, codes.size) + 1):
        windows = sliding_window_view(codes, L)
        keys = windows.astype(np.int64) @ (4 ** np.arange(L - 1, -1, -1, dtype=np.int64))
        uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        flats.append(windows[first].ravel())
        lengths.append(np.full(uniq.size, L))
        ids.append(base + inverse)
        pos.append(np.arange(windows.shape[0]))
        present_keys.update((L, int(k)) for k in uniq)
        base += uniq.size
    n_present = base

    absent = []
    attempts = 0
    while len(absent) < n_absent and attempts < 100 * n_absent:
        attempts += 1
        L = int(rng.integers(1, max_len + 1))
        p = rng.integers(0, 4, size=L, dtype=np.uint8)
        key = int(p.astype(np.int64) @ (4 ** np.arange(L - 1, -1, -1, dtype=np.int64)))
        if (L, key) not in present_keys:
            present_keys.add((L, key))
            absent.append(p)
    flats.extend(absent)
    lengths.append(np.array([a.size for a in absent], dtype=np.int64))

    lengths = np.concatenate(lengths) if lengths else np.zeros(0, np.int64)
    offsets = np.zeros(lengths.size + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    flat = np.concatenate(flats).astype(np.uint8) if flats else np.zeros(0, np.uint8)
    ids = np.concatenate(ids) if ids else np.zeros(0, np.int64)
    pos = np.concatenate(pos) if pos else np.zeros(0, np.int64)
    order = np.lexsort((pos, ids))
    n_queries = offsets.size - 1
    expect_offsets = np.zeros(n_queries + 1, dtype=np.int64)
    np.cumsum(np.bincount(ids, minlength=n_queries), out=expect_offsets[1:])
    return QuerySet(flat, offsets, n_present, ids[order], pos[order], expect_offsets)


@dataclass
class Failure:
    check: str
    D: int
    engine: str
    threshold: int | None
    pattern: str | None
    detail: str
    text: np.ndarray | None = field(default=None, repr=False)

    def __str__(self) -> str:
        th = "inf" if self.threshold is None else self.threshold
        return (f"[{self.check}] D={self.D} engine={self.engine} threshold={th} "
                f"pattern={self.pattern!r}: {self.detail}")


@dataclass
class SuiteReport:
    texts: int = 0
    configurations: int = 0
    queries: int = 0
    positions_checked: int = 0
    max_walk_value: int = 0
    roundtrip_arrays: int = 0
    failures: list[Failure] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def bump(self, check: str, k: int = 1) -> None:
        self.counters[check] = self.counters.get(check, 0) + k

    def violations(self, check: str) -> int:
        return self.counters.get(check, 0)

    @property
    def ok(self) -> bool:
        return not self.counters


@njit(cache=True)
def _scan_batch(offsets, positions, mech, lay, exp_offsets, exp_pos, D, residues, bad):
    """First offending pattern id per check, or -1: ``bad`` holds
    [equivalence, residue, duplicate]."""
    bad[:] = -1
    for k in range(offsets.size - 1):
        a, b = offsets[k], offsets[k + 1]
        got = np.sort(positions[a:b])
        ea, eb = exp_offsets[k], exp_offsets[k + 1]
        if bad[0] < 0:
            if b - a != eb - ea:
                bad[0] = k
            else:
                for i in range(b - a):
                    if got[i] != exp_pos[ea + i]:
                        bad[0] = k
                        break
        if not residues:
            continue
        if bad[2] < 0:
            for i in range(1, b - a):
                if got[i] == got[i - 1]:
                    bad[2] = k
                    break
        if bad[1] < 0:
            for i in range(a, b):
                x, t, layer = positions[i], mech[i], lay[i]
                if t == TREE:
                    ok = layer <= D - 2 and x % D == layer
                elif t == DRAIN:
                    ok = x % D == layer
                elif t == EARLY_LEAF:
                    ok = layer == D - 1 and x % D == D - 1
                else:
                    ok = False
                if not ok:
                    bad[1] = k
                    break


class SuiteRunner:
    """Checks one text at a time against the window oracle.

    ``thresholds`` are the branch-cut settings exercised for FMtree;
    ``early_stop_modes`` selects FMtree with and/or without the ``occ``
    cutoff.  ``roundtrip`` additionally re-runs every engine on a serialized
    and reloaded copy of each index and requires identical output arrays.
    """

    def __init__(self, D_values=range(2, 9), thresholds=THRESHOLDS, roundtrip=False,
                 early_stop_modes=(True, False), fault_sep_bias: int = 0,
                 max_failures: int = 20):
        self.D_values = list(D_values)
        self.thresholds = list(thresholds)
        self.early_stop_modes = tuple(early_stop_modes)
        self.roundtrip = roundtrip
        self.fault_sep_bias = fault_sep_bias
        self.max_failures = max_failures
        self.report = SuiteReport()
        self._text = None
        self._queries = None

    def _fail(self, check, D, engine, threshold, q: QuerySet | None, k: int, detail: str):
        self.report.bump(check)
        if len(self.report.failures) < self.max_failures:
            pattern = decode(q.pattern(k).codes) if q is not None and k >= 0 else None
            self.report.failures.append(
                Failure(check, D, engine, threshold, pattern, detail, self._text))

    def _compare(self, q, D, engine, threshold, batch, residues=False):
        bad = np.empty(3, dtype=np.int64)
        if residues:
            mech, lay = batch.mechanism, batch.layer
        else:
            mech = np.zeros(0, np.uint8)
            lay = np.zeros(0, np.int16)
        _scan_batch(batch.offsets, batch.positions, mech, lay, q.expect_offsets, q.expect_pos,
                    D, residues, bad)
        self.report.positions_checked += int(batch.positions.size)
        if bad[0] >= 0:
            self._fail("equivalence", D, engine, threshold, q, int(bad[0]), "positions differ from oracle")
        if bad[1] >= 0:
            self._fail("residue", D, engine, threshold, q, int(bad[1]),
                       "position reported for the wrong residue class")
        if bad[2] >= 0:
            self._fail("duplicate", D, engine, threshold, q, int(bad[2]), "position reported twice")

    def _run_engines(self, q, D, iv: FmIndex, isub: FmIndex, verify=True):
        """Run every engine and return the raw output arrays.

        With ``verify`` off the outputs are only collected, for comparing a
        reloaded index against answers that were already checked.
        """
        outputs = {}
        rv = search_many(iv, q.flat, q.offsets)
        rs = search_many(isub, q.flat, q.offsets)
        first = q.flat[q.offsets[:-1]].astype(np.int64)
        outputs["ranges_v"] = rv
        outputs["ranges_s"] = rs

        if verify:
            exp_counts = q.expected_counts()
            for name, r in (("count_v", rv), ("count_s", rs)):
                got = np.maximum(r[:, 1] - r[:, 0] + 1, 0)
                if not np.array_equal(got, exp_counts):
                    k = int(np.flatnonzero(got != exp_counts)[0])
                    self._fail("count", D, name, None, q, k, f"count {got[k]} != {exp_counts[k]}")

        ov = OriginalLocator(iv).locate_ranges(rv)
        outputs["original_v"] = ov.positions
        if verify:
            self._compare(q, D, "original_v", None, ov)
            walk = int(ov.stats[STAT_MAX_WALK])
            if walk > D - 1:
                self._fail("step_bound", D, "original_v", None, q, -1,
                           f"walk of {walk} LF steps exceeds D-1={D - 1}")
            self.report.max_walk_value = max(self.report.max_walk_value, walk)

        os_ = OriginalLocator(isub).locate_ranges(rs)
        outputs["original_s"] = os_.positions
        if verify:
            self._compare(q, D, "original_s", None, os_)

        for th in self.thresholds:
            for early_stop in self.early_stop_modes:
                loc = FMTreeLocator(iv, th, early_stop=early_stop, _sep_bias=self.fault_sep_bias)
                name = "fmtree" + ("" if early_stop else "/no-cutoff")
                try:
                    fb = loc.locate_ranges(rv, first)
                except InvariantViolation as exc:
                    if verify:
                        self._fail("equivalence", D, name, th, None, -1, str(exc))
                    continue
                if verify:
                    self._compare(q, D, name, th, fb, residues=True)
                key = f"{name}/{th}"
                outputs[key] = fb.positions
                outputs[key + "/mechanism"] = fb.mechanism
                outputs[key + "/layer"] = fb.layer
        if verify:
            self.report.configurations += 2 + len(self.early_stop_modes) * len(self.thresholds)
        return outputs

    def check_text(self, text: PackedText, rng: np.random.Generator) -> None:
        q = build_queries(text, rng)
        self._text = text.codes
        self._queries = q
        self.report.texts += 1
        self.report.queries += q.size
        sa = build_suffix_array(text)
        for D in self.D_values:
            iv = build_index(text, D, VALUE, sa=sa)
            isub = build_index(text, D, SUBSCRIPT, sa=sa)
            outputs = self._run_engines(q, D, iv, isub)
            if self.roundtrip:
                blobs = (to_bytes(iv), to_bytes(isub))
                iv2, isub2 = (from_bytes(b) for b in blobs)
                if any(to_bytes(x) != b for x, b in zip((iv2, isub2), blobs)):
                    self._fail("roundtrip", D, "serialize", None, None, -1,
                               "re-serialized index differs from the original stream")
                again = self._run_engines(q, D, iv2, isub2, verify=False)
                self.report.roundtrip_arrays += len(outputs)
                for key, arr in outputs.items():
                    if key not in again or arr.dtype != again[key].dtype \
                            or not np.array_equal(arr, again[key]):
                        self._fail("roundtrip", D, key, None, q, -1, "reloaded index answers differently")


def run_suite(n_texts: int, max_len: int, seed: int, stop_on_failure: bool = False,
              **kwargs) -> SuiteReport:
    """Random texts of ``1..max_len`` characters (uniform), sentinel not counted."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    rng = make_rng(seed)
    runner = SuiteRunner(**kwargs)
    for i in range(n_texts):
        length = int(rng.integers(1, max_len, endpoint=True))
        text = PackedText(rng.integers(0, 4, size=length, dtype=np.uint8))
        runner.check_text(text, rng)
        if stop_on_failure and not runner.report.ok:
            break
        if (i + 1) % 20 == 0:
            log.info("checked %d/%d texts", i + 1, n_texts)
    return runner.report


def single_mismatch(codes: np.ndarray, pattern: np.ndarray, D: int, engine: str,
                    threshold: int | None, sep_bias: int = 0) -> bool:
    """True when ``engine`` disagrees with the naive scan on this one query."""
    if codes.size == 0 or pattern.size == 0:
        return False
    text = PackedText(codes)
    P = Pattern(pattern)
    expected = naive_locate(text, P)
    strategy = SUBSCRIPT if engine.startswith("original_s") else VALUE
    index = build_index(text, D, strategy)
    try:
        if engine.startswith("fmtree"):
            loc = FMTreeLocator(index, threshold, early_stop="no-cutoff" not in engine, _sep_bias=sep_bias)
        else:
            loc = OriginalLocator(index)
        res = loc.locate(P)
    except InvariantViolation:
        return True
    return len(res) != len(expected) or res.as_set() != expected


def find_failing_pattern(codes: np.ndarray, D: int, engine: str, threshold: int | None,
                         sep_bias: int = 0) -> np.ndarray | None:
    """First pattern of the text's query set on which ``engine`` disagrees
    with the window oracle, or None."""
    text = PackedText(codes)
    q = build_queries(text, make_rng(0), n_absent=0)
    strategy = SUBSCRIPT if engine.startswith("original_s") else VALUE
    index = build_index(text, D, strategy)
    if engine.startswith("fmtree"):
        loc = FMTreeLocator(index, threshold, early_stop="no-cutoff" not in engine, _sep_bias=sep_bias)
    else:
        loc = OriginalLocator(index)
    exp_counts = q.expected_counts()
    for k in range(q.size):
        expected = q.expect_pos[q.expect_offsets[k]:q.expect_offsets[k + 1]]
        try:
            got = np.sort(loc.locate(q.pattern(k)).positions)
        except InvariantViolation:
            return q.pattern(k).codes
        if got.size != exp_counts[k] or not np.array_equal(got, expected):
            return q.pattern(k).codes
    return None


def minimize(codes: np.ndarray, pattern: np.ndarray, D: int, engine: str,
             threshold: int | None, sep_bias: int = 0, budget: int = 3000) -> np.ndarray:
    """Greedy chunk deletion on the text while the mismatch persists."""
    codes = codes.copy()
    chunk = max(codes.size // 2, 1)
    while chunk >= 1 and budget > 0:
        i = 0
        shrunk = False
        while i < codes.size and budget > 0:
            candidate = np.concatenate([codes[:i], codes[i + chunk:]])
            budget -= 1
            if single_mismatch(candidate, pattern, D, engine, threshold, sep_bias):
                codes = candidate
                shrunk = True
            else:
                i += chunk
        if not shrunk:
            chunk //= 2
    return codes
