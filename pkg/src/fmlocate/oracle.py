"""Brute-force reference answers.

Two routes that share no code with the index: a sliding-window scan over
the text, and a comparison-sorted suffix array searched by binary search.
"""
from __future__ import annotations

import numpy as np

from .textio import PackedText, Pattern


def _as_bytes(codes) -> bytes:
    return np.asarray(codes, dtype=np.uint8).tobytes()


def naive_locate(text: PackedText, pattern: Pattern) -> set[int]:
    if len(pattern) == 0:
        raise ValueError("pattern must be non-empty")
    hay = _as_bytes(text.codes)
    needle = _as_bytes(pattern.codes)
    found = set()
    i = hay.find(needle)
    while i >= 0:
        found.add(i)
        i = hay.find(needle, i + 1)
    return found


def naive_count(text: PackedText, pattern: Pattern) -> int:
    return len(naive_locate(text, pattern))


def naive_suffix_array(text: PackedText) -> np.ndarray:
    """O(n^2 log n) comparison sort; ``$`` sorts below every code."""
    hay = _as_bytes(np.asarray(text.codes, dtype=np.uint8) + 1) + b"\x00"
    return np.array(sorted(range(len(hay)), key=lambda i: hay[i:]), dtype=np.int64)


def naive_bwt(text: PackedText) -> str:
    """Last column of the sorted cyclic-rotation matrix, with ``$`` kept."""
    s = text.decode() + "$"
    rotations = sorted(range(len(s)), key=lambda i: (s[i:] + s[:i]).replace("$", "\x00"))
    return "".join(s[i - 1] for i in rotations)


def sa_search_locate(text: PackedText, sa: np.ndarray, pattern: Pattern) -> set[int]:
    """Locate by binary search over an explicit suffix array."""
    hay = _as_bytes(np.asarray(text.codes, dtype=np.uint8) + 1) + b"\x00"
    needle = _as_bytes(np.asarray(pattern.codes, dtype=np.uint8) + 1)
    m = len(needle)

    lo, hi = 0, len(sa)
    while lo < hi:
        mid = (lo + hi) // 2
        if hay[sa[mid]:sa[mid] + m] < needle:
            lo = mid + 1
        else:
            hi = mid
    start = lo
    hi = len(sa)
    while lo < hi:
        mid = (lo + hi) // 2
        if hay[sa[mid]:sa[mid] + m] <= needle:
            lo = mid + 1
        else:
            hi = mid
    return {int(p) for p in sa[start:lo]}
