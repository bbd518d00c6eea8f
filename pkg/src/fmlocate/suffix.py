"""Suffix array construction by induced sorting (SA-IS) and BWT derivation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .textio import PackedText


@dataclass(frozen=True, eq=False)
class SuffixArray:
    entries: np.ndarray

    def __len__(self) -> int:
        return int(self.entries.size)

    def __getitem__(self, i):
        return self.entries[i]


@dataclass(frozen=True, eq=False)
class BwtString:
    """BWT codes with the ``$`` row removed; ``codes`` has ``n - 1`` entries."""

    codes: np.ndarray
    sentinel_row: int

    @property
    def n(self) -> int:
        return int(self.codes.size) + 1

    def full_codes(self) -> np.ndarray:
        """Length-``n`` view with code 0 in the sentinel slot."""
        return np.insert(self.codes, self.sentinel_row, 0)


def position_dtype(n: int):
    return np.uint32 if n < 2**32 else np.uint64


@njit(cache=True)
def _classify(s, stype):
    n = s.shape[0]
    stype[n - 1] = True
    for i in range(n - 2, -1, -1):
        if s[i] < s[i + 1]:
            stype[i] = True
        elif s[i] > s[i + 1]:
            stype[i] = False
        else:
            stype[i] = stype[i + 1]


@njit(cache=True)
def _is_lms(stype, i):
    return i > 0 and stype[i] and not stype[i - 1]


@njit(cache=True)
def _bucket_bounds(s, k, ends):
    counts = np.zeros(k, dtype=np.int64)
    for i in range(s.shape[0]):
        counts[s[i]] += 1
    bounds = np.empty(k, dtype=np.int64)
    total = 0
    for c in range(k):
        if ends:
            total += counts[c]
            bounds[c] = total
        else:
            bounds[c] = total
            total += counts[c]
    return bounds


@njit(cache=True)
def _induce(s, k, sa, stype):
    n = s.shape[0]
    heads = _bucket_bounds(s, k, False)
    for i in range(n):
        j = sa[i] - 1
        if j >= 0 and not stype[j]:
            sa[heads[s[j]]] = j
            heads[s[j]] += 1
    tails = _bucket_bounds(s, k, True)
    for i in range(n - 1, -1, -1):
        j = sa[i] - 1
        if j >= 0 and stype[j]:
            tails[s[j]] -= 1
            sa[tails[s[j]]] = j


@njit(cache=True)
def _lms_equal(s, stype, a, b):
    n = s.shape[0]
    if a == n - 1 or b == n - 1:
        return a == b
    i = 0
    while True:
        if s[a + i] != s[b + i] or stype[a + i] != stype[b + i]:
            return False
        if i > 0 and _is_lms(stype, a + i):
            return True
        i += 1


@njit(cache=True)
def _sais(s, k):
    """Suffix array of ``s``; ``s[-1]`` must be a unique minimal symbol."""
    n = s.shape[0]
    sa = np.full(n, -1, dtype=np.int64)
    if n == 1:
        sa[0] = 0
        return sa
    stype = np.zeros(n, dtype=np.bool_)
    _classify(s, stype)

    # Stage 1: approximate LMS order by sorting LMS substrings.
    tails = _bucket_bounds(s, k, True)
    for i in range(n - 1, 0, -1):
        if _is_lms(stype, i):
            tails[s[i]] -= 1
            sa[tails[s[i]]] = i
    _induce(s, k, sa, stype)

    n1 = 0
    for i in range(n):
        if _is_lms(stype, sa[i]):
            sa[n1] = sa[i]
            n1 += 1

    # Name the LMS substrings; names are stored at sa[n1 + pos // 2].
    for i in range(n1, n):
        sa[i] = -1
    name = 0
    prev = -1
    for i in range(n1):
        pos = sa[i]
        if prev < 0 or not _lms_equal(s, stype, pos, prev):
            name += 1
            prev = pos
        sa[n1 + pos // 2] = name - 1
    s1 = np.empty(n1, dtype=np.int64)
    j = n1
    for i in range(n - 1, n1 - 1, -1):
        if sa[i] >= 0:
            j -= 1
            s1[j] = sa[i]

    # Stage 2: exact LMS order, recursing while names collide.
    if name < n1:
        sa1 = _sais(s1, name)
    else:
        sa1 = np.empty(n1, dtype=np.int64)
        for i in range(n1):
            sa1[s1[i]] = i

    lms_pos = np.empty(n1, dtype=np.int64)
    j = 0
    for i in range(1, n):
        if _is_lms(stype, i):
            lms_pos[j] = i
            j += 1
    for i in range(n):
        sa[i] = -1
    tails = _bucket_bounds(s, k, True)
    for i in range(n1 - 1, -1, -1):
        p = lms_pos[sa1[i]]
        tails[s[p]] -= 1
        sa[tails[s[p]]] = p
    _induce(s, k, sa, stype)
    return sa


def build_suffix_array(text: PackedText) -> SuffixArray:
    """Suffix array of ``text`` followed by ``$`` (the unique smallest symbol)."""
    s = np.empty(text.n, dtype=np.int64)
    s[:-1] = text.codes
    s[:-1] += 1
    s[-1] = 0
    sa = _sais(s, 5)
    return SuffixArray(sa.astype(position_dtype(text.n)))


def derive_bwt(text: PackedText, sa: SuffixArray) -> BwtString:
    entries = sa.entries.astype(np.int64)
    sentinel_row = int(np.flatnonzero(entries == 0)[0])
    prev = np.delete(entries, sentinel_row) - 1
    return BwtString(text.codes[prev], sentinel_row)
