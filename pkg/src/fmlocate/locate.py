"""Locating engines.

``OriginalLocator`` resolves every row of an SA range independently by
walking LF until a sampled row (works with both sampling strategies).

``FMTreeLocator`` needs value sampling.  With sampling distance ``D`` every
text position ``x`` falls into one residue class ``x mod D``.  Residue ``i``
(``i < D - 1``) is harvested from the SA ranges of the ``4**i`` extensions
``*^i P``, which form layer ``i`` of a quadtree rooted at the range of ``P``
and traversed breadth first: sampled rows in a layer-``i`` range are
exactly the occurrences with residue ``i``.  Residue ``D - 1`` comes from a
single sequential scan over the range of ``P[1:]`` (early leaf), so the
tree only has ``D - 1`` layers.  Small ranges are finished with short LF
walks instead of being expanded further.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from .errors import InvariantViolation, UnsupportedStrategyError
from .fmindex import (
    VALUE,
    FmIndex,
    SARange,
    backward_search,
    backward_search_batch,
    is_sampled_kernel,
    lf_kernel,
    sample_kernel,
)
from .rank import bit_get, bit_rank, bwt_access, bwt_rank_all, popcount64
from .textio import Pattern

DEFAULT_THRESHOLD = 16
NO_THRESHOLD = np.iinfo(np.int64).max

# mechanism tags attached to every FMtree position
TREE = 0
DRAIN = 1
EARLY_LEAF = 2

# slots of the per-query stats vector
STAT_LF = 0
STAT_BWT_RANK = 1
STAT_BIT_RANK = 2
STAT_EXPANDED = 3
STAT_DRAINS = 4
STAT_MAX_WALK = 5
STAT_VISITED = 6
STAT_OVERFLOW = 7
N_STATS = 8

# columns of the per-layer stats matrix
LAYER_BWT_RANK = 0
LAYER_BIT_RANK = 1
LAYER_NODES = 2

_ONE = np.uint64(1)


class TreeNode(NamedTuple):
    sp: int
    ep: int
    layer: int


@dataclass
class LocateStats:
    lf_ops: int = 0
    bwt_rank_ops: int = 0
    bit_rank_ops: int = 0
    nodes_expanded: int = 0
    drains: int = 0
    max_walk: int = 0
    nodes_visited: int = 0
    # per layer: single-character BWT ranks spent producing that layer's
    # ranges, bitmap ranks spent in it, and nodes dequeued from it
    layer_bwt_ranks: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    layer_bit_ranks: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    layer_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    @classmethod
    def from_arrays(cls, stats, layer_stats=None) -> "LocateStats":
        out = cls(
            lf_ops=int(stats[STAT_LF]),
            bwt_rank_ops=int(stats[STAT_BWT_RANK]),
            bit_rank_ops=int(stats[STAT_BIT_RANK]),
            nodes_expanded=int(stats[STAT_EXPANDED]),
            drains=int(stats[STAT_DRAINS]),
            max_walk=int(stats[STAT_MAX_WALK]),
            nodes_visited=int(stats[STAT_VISITED]),
        )
        if layer_stats is not None:
            out.layer_bwt_ranks = layer_stats[:, LAYER_BWT_RANK].copy()
            out.layer_bit_ranks = layer_stats[:, LAYER_BIT_RANK].copy()
            out.layer_nodes = layer_stats[:, LAYER_NODES].copy()
        return out


@dataclass
class LocateResult:
    """Occurrence positions of one pattern, in no particular order.

    For FMtree results ``mechanism[k]`` tells which stage reported
    ``positions[k]`` (``TREE``, ``DRAIN`` or ``EARLY_LEAF``) and ``layer[k]``
    the residue class it was harvested for.
    """

    positions: np.ndarray
    stats: LocateStats
    mechanism: np.ndarray | None = None
    layer: np.ndarray | None = None

    def as_set(self) -> set[int]:
        return set(self.positions.tolist())

    def __len__(self) -> int:
        return int(self.positions.size)


@dataclass
class BatchResult:
    """Concatenated results of many patterns; pattern ``k`` owns
    ``positions[offsets[k]:offsets[k + 1]]``."""

    ranges: np.ndarray  # (k, 4): sp, ep, penult sp, penult ep
    offsets: np.ndarray
    positions: np.ndarray
    stats: np.ndarray
    mechanism: np.ndarray | None = None
    layer: np.ndarray | None = None
    layer_stats: np.ndarray | None = None

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def total_occ(self) -> int:
        return int(self.offsets[-1])

    def positions_of(self, k: int) -> np.ndarray:
        return self.positions[self.offsets[k]:self.offsets[k + 1]]


# ---------------------------------------------------------------- kernels


@njit(cache=True, nogil=True, inline="always")
def _walk_original(v, sp, ep, out, stats):
    k = 0
    for i in range(sp, ep + 1):
        j = i
        m = 0
        while True:
            if j == v.sentinel_row:
                pos = m
                break
            if is_sampled_kernel(v, j):
                if v.value:
                    stats[STAT_BIT_RANK] += 1
                pos = sample_kernel(v, j) + m
                break
            j = lf_kernel(v, j)
            m += 1
        stats[STAT_LF] += m
        stats[STAT_BWT_RANK] += m
        if m > stats[STAT_MAX_WALK]:
            stats[STAT_MAX_WALK] = m
        out[k] = pos
        k += 1
    return k


@njit(cache=True, nogil=True, inline="always")
def _emit(out, mech, lay, num, pos, tag, layer, stats):
    if num >= out.shape[0]:
        stats[STAT_OVERFLOW] = 1
        return num
    out[num] = pos
    mech[num] = tag
    lay[num] = layer
    return num + 1


@njit(cache=True, nogil=True, inline="always")
def early_leaf_kernel(v, psp, pep, first_char, out, mech, lay, num, stats):
    """Report ``SA[j] - 1`` for sampled ``j`` in ``[psp, pep]`` whose BWT char
    is ``first_char``; one sequential pass over B and the BWT."""
    if psp > pep:
        return num
    k = bit_rank(v.bits, v.bdir, psp)
    stats[STAT_BIT_RANK] += 1
    w_first = psp >> 6
    w_last = pep >> 6
    for w in range(w_first, w_last + 1):
        word = v.bits[w]
        if w == w_first:
            word &= ~((_ONE << np.uint64(psp & 63)) - _ONE)
        if w == w_last and (pep & 63) < 63:
            word &= (_ONE << np.uint64((pep & 63) + 1)) - _ONE
        while word:
            low = word & (~word + _ONE)
            j = (w << 6) + popcount64(low - _ONE)
            if bwt_access(v.words, v.sentinel_row, j) == first_char:
                y = np.int64(v.ssa[k])
                if y >= 1:
                    num = _emit(out, mech, lay, num, y - 1, EARLY_LEAF, v.D - 1, stats)
            k += 1
            word &= word - _ONE
    return num


@njit(cache=True, nogil=True, inline="always")
def retrieve_kernel(v, sp, ep, layer, sep_bias, out, mech, lay, num, stats):
    ssp = bit_rank(v.bits, v.bdir, sp)
    sep = bit_rank(v.bits, v.bdir, ep + 1) - 1 + sep_bias
    stats[STAT_BIT_RANK] += 2
    if sep >= v.ssa.shape[0]:
        sep = v.ssa.shape[0] - 1
    for k in range(ssp, sep + 1):
        num = _emit(out, mech, lay, num, np.int64(v.ssa[k]) + layer, TREE, layer, stats)
    return num


@njit(cache=True, nogil=True, inline="always")
def expand_kernel(v, sp, ep, child_sp, child_ep, lo, hi):
    """Ranges of the four one-character extensions of ``[sp, ep]``."""
    bwt_rank_all(v.words, v.blocks, v.supers, v.sentinel_row, sp, lo)
    bwt_rank_all(v.words, v.blocks, v.supers, v.sentinel_row, ep + 1, hi)
    for s in range(4):
        child_sp[s] = v.C[s + 1] + lo[s]
        child_ep[s] = v.C[s + 1] + hi[s] - 1


@njit(cache=True, nogil=True, inline="always")
def drain_kernel(v, sp, ep, layer, out, mech, lay, num, stats):
    budget = v.D - layer - 2
    for row in range(sp, ep + 1):
        j = row
        m = 0
        while True:
            if bit_get(v.bits, j):
                stats[STAT_BIT_RANK] += 1
                y = np.int64(v.ssa[bit_rank(v.bits, v.bdir, j)])
                num = _emit(out, mech, lay, num, y + m + layer, DRAIN, layer + m, stats)
                break
            if m == budget:
                break
            j = lf_kernel(v, j)
            m += 1
        stats[STAT_LF] += m
        stats[STAT_BWT_RANK] += m
        if m > stats[STAT_MAX_WALK]:
            stats[STAT_MAX_WALK] = m
    return num


@njit(cache=True, nogil=True, inline="always")
def _fmtree(v, first_char, sp, ep, psp, pep, threshold, early_stop, sep_bias,
            qsp, qep, qlayer, work, out, mech, lay, stats, layer_stats):
    occ = ep - sp + 1
    height = v.D - 1
    num = early_leaf_kernel(v, psp, pep, first_char, out, mech, lay, 0, stats)

    # work rows: child starts, child ends, rank scratch at sp, at ep + 1
    child_sp = work[0]
    child_ep = work[1]
    lo = work[2]
    hi = work[3]
    cap = qsp.shape[0]
    head = 0
    size = 1
    qsp[0] = sp
    qep[0] = ep
    qlayer[0] = 0
    while size > 0 and (num < occ or not early_stop):
        nsp = qsp[head]
        nep = qep[head]
        layer = qlayer[head]
        head += 1
        if head == cap:
            head = 0
        size -= 1
        stats[STAT_VISITED] += 1
        layer_stats[layer, LAYER_NODES] += 1

        if nep - nsp + 1 < threshold:
            stats[STAT_DRAINS] += 1
            before = stats[STAT_BIT_RANK]
            num = drain_kernel(v, nsp, nep, layer, out, mech, lay, num, stats)
            layer_stats[layer, LAYER_BIT_RANK] += stats[STAT_BIT_RANK] - before
            continue

        num = retrieve_kernel(v, nsp, nep, layer, sep_bias, out, mech, lay, num, stats)
        layer_stats[layer, LAYER_BIT_RANK] += 2
        if layer + 1 < height:
            expand_kernel(v, nsp, nep, child_sp, child_ep, lo, hi)
            stats[STAT_EXPANDED] += 1
            stats[STAT_BWT_RANK] += 8
            layer_stats[layer + 1, LAYER_BWT_RANK] += 8
            for s in range(4):
                if child_sp[s] <= child_ep[s]:
                    if size == cap:
                        stats[STAT_OVERFLOW] = 1
                        return num
                    tail = head + size
                    if tail >= cap:
                        tail -= cap
                    qsp[tail] = child_sp[s]
                    qep[tail] = child_ep[s]
                    qlayer[tail] = layer + 1
                    size += 1
        if stats[STAT_OVERFLOW]:
            break
    return num


@njit(cache=True, nogil=True)
def _fmtree_batch(v, first_chars, ranges, out_offsets, threshold, early_stop, sep_bias,
                  qsp, qep, qlayer, out, mech, lay, found, stats, layer_stats):
    work = np.empty((4, 4), dtype=np.int64)
    for k in range(ranges.shape[0]):
        sp = ranges[k, 0]
        ep = ranges[k, 1]
        if sp > ep:
            continue
        a = out_offsets[k]
        b = out_offsets[k + 1]
        found[k] = _fmtree(v, first_chars[k], sp, ep, ranges[k, 2], ranges[k, 3],
                           threshold, early_stop, sep_bias, qsp, qep, qlayer, work,
                           out[a:b], mech[a:b], lay[a:b], stats, layer_stats)
        if stats[STAT_OVERFLOW]:
            return


@njit(cache=True, nogil=True)
def _original_batch(v, ranges, out_offsets, out, stats):
    for k in range(ranges.shape[0]):
        if ranges[k, 0] <= ranges[k, 1]:
            a = out_offsets[k]
            _walk_original(v, ranges[k, 0], ranges[k, 1], out[a:out_offsets[k + 1]], stats)


# ---------------------------------------------------------------- helpers


def pack_patterns(patterns: Sequence[Pattern]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(patterns) + 1, dtype=np.int64)
    np.cumsum([len(p) for p in patterns], out=offsets[1:])
    if patterns:
        flat = np.concatenate([p.codes for p in patterns])
    else:
        flat = np.zeros(0, dtype=np.uint8)
    return flat, offsets


def search_many(index: FmIndex, flat: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Backward search for packed patterns; returns ``(k, 4)`` ranges."""
    if np.any(np.diff(offsets) < 1):
        raise ValueError("empty pattern in batch")
    ranges = np.empty((offsets.size - 1, 4), dtype=np.int64)
    backward_search_batch(index.kernel_view(), flat, offsets, ranges)
    return ranges


def _out_offsets(ranges: np.ndarray) -> np.ndarray:
    sizes = np.maximum(ranges[:, 1] - ranges[:, 0] + 1, 0)
    offsets = np.zeros(ranges.shape[0] + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    return offsets


def _require_value(index: FmIndex) -> None:
    if index.strategy != VALUE:
        raise UnsupportedStrategyError(
            f"FMtree requires a value-sampled index, this one uses {index.strategy} sampling"
        )


def _scratch(n):
    return (
        np.empty(n, dtype=np.int64),
        np.empty(n, dtype=np.uint8),
        np.empty(n, dtype=np.int16),
        np.zeros(N_STATS, dtype=np.int64),
    )


# ---------------------------------------------------------------- engines


class OriginalLocator:
    """One-by-one LF walks; ``Original_v`` or ``Original_s`` depending on
    how the index was sampled."""

    def __init__(self, index: FmIndex):
        self.index = index
        self._view = index.kernel_view()

    @property
    def name(self) -> str:
        return "original_v" if self.index.strategy == VALUE else "original_s"

    def locate_range(self, rng: SARange) -> LocateResult:
        sp, ep = rng
        if sp > ep:
            return LocateResult(np.zeros(0, np.int64), LocateStats())
        if sp < 0 or ep >= self.index.n:
            raise IndexError(f"range {rng} outside 0..{self.index.n - 1}")
        out = np.empty(ep - sp + 1, dtype=np.int64)
        stats = np.zeros(N_STATS, dtype=np.int64)
        _walk_original(self._view, sp, ep, out, stats)
        return LocateResult(out, LocateStats.from_arrays(stats))

    def locate(self, pattern: Pattern) -> LocateResult:
        return self.locate_range(backward_search(self.index, pattern)[0])

    def locate_ranges(self, ranges: np.ndarray, first_chars=None) -> BatchResult:
        offsets = _out_offsets(ranges)
        out = np.empty(offsets[-1], dtype=np.int64)
        stats = np.zeros(N_STATS, dtype=np.int64)
        _original_batch(self._view, ranges, offsets, out, stats)
        return BatchResult(ranges, offsets, out, stats)

    def locate_many(self, patterns: Sequence[Pattern]) -> BatchResult:
        flat, offsets = pack_patterns(patterns)
        return self.locate_ranges(search_many(self.index, flat, offsets))


class FMTreeLocator:
    """Quadtree locate over a value-sampled index.

    ``threshold``: ranges with fewer rows are finished by LF walks (0 turns
    this off, ``None`` drains every node).  ``early_stop``: stop once ``occ``
    positions are known.  An instance keeps its queue between queries and
    must not be shared by concurrent callers.
    """

    name = "fmtree"

    def __init__(self, index: FmIndex, threshold: int | None = DEFAULT_THRESHOLD,
                 early_stop: bool = True, _sep_bias: int = 0):
        _require_value(index)
        self.index = index
        self.threshold = NO_THRESHOLD if threshold is None else int(threshold)
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        self.early_stop = bool(early_stop)
        self._sep_bias = int(_sep_bias)
        self._view = index.kernel_view()
        self._queue = _queue(0)

    def _ensure_queue(self, occ: int):
        if self._queue[0].size < occ + 4:
            self._queue = _queue(max(occ + 4, 2 * self._queue[0].size))
        return self._queue

    def _layer_stats(self):
        return np.zeros((self.index.D, 3), dtype=np.int64)

    def locate_range(self, rng: SARange, penult: SARange, first_char: int) -> LocateResult:
        sp, ep = rng
        layer_stats = self._layer_stats()
        if sp > ep:
            empty = np.zeros(0, np.int64)
            return LocateResult(empty, LocateStats.from_arrays(np.zeros(N_STATS, np.int64), layer_stats),
                                np.zeros(0, np.uint8), np.zeros(0, np.int16))
        occ = ep - sp + 1
        out, mech, lay, stats = _scratch(occ)
        qsp, qep, qlayer = self._ensure_queue(occ)
        num = _fmtree(self._view, int(first_char), sp, ep, penult.sp, penult.ep,
                      self.threshold, self.early_stop, self._sep_bias,
                      qsp, qep, qlayer, np.empty((4, 4), np.int64), out, mech, lay,
                      stats, layer_stats)
        if stats[STAT_OVERFLOW]:
            raise InvariantViolation(f"FMtree produced more than occ={occ} positions")
        return LocateResult(out[:num], LocateStats.from_arrays(stats, layer_stats),
                            mech[:num], lay[:num])

    def locate(self, pattern: Pattern) -> LocateResult:
        rng, penult = backward_search(self.index, pattern)
        return self.locate_range(rng, penult, int(pattern.codes[0]))

    def locate_ranges(self, ranges: np.ndarray, first_chars: np.ndarray) -> BatchResult:
        """Locate a batch whose ranges came from ``search_many``.

        Patterns for which fewer than ``occ`` positions were found keep
        their full slot; ``found`` lengths are checked and any shortfall is
        reported as an invariant violation.
        """
        offsets = _out_offsets(ranges)
        total = int(offsets[-1])
        out, mech, lay, stats = _scratch(total)
        layer_stats = self._layer_stats()
        found = np.zeros(ranges.shape[0], dtype=np.int64)
        max_occ = int(np.diff(offsets).max(initial=0))
        qsp, qep, qlayer = self._ensure_queue(max_occ)
        _fmtree_batch(self._view, np.ascontiguousarray(first_chars, dtype=np.int64), ranges, offsets,
                      self.threshold, self.early_stop, self._sep_bias,
                      qsp, qep, qlayer, out, mech, lay, found, stats, layer_stats)
        if stats[STAT_OVERFLOW]:
            raise InvariantViolation("FMtree produced more positions than occ")
        short = np.flatnonzero(found != np.diff(offsets))
        if short.size:
            k = int(short[0])
            raise InvariantViolation(
                f"FMtree found {found[k]} of {offsets[k + 1] - offsets[k]} positions for batch entry {k}"
            )
        return BatchResult(ranges, offsets, out, stats, mech, lay, layer_stats)

    def locate_many(self, patterns: Sequence[Pattern]) -> BatchResult:
        flat, offsets = pack_patterns(patterns)
        ranges = search_many(self.index, flat, offsets)
        return self.locate_ranges(ranges, flat[offsets[:-1]])


def _queue(n):
    return (np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n, np.int64))


def make_locator(index: FmIndex, engine: str, threshold: int | None = DEFAULT_THRESHOLD):
    """``engine`` is ``fmtree``, ``original`` (follows the index's sampling),
    ``original_v`` or ``original_s``."""
    if engine == "fmtree":
        return FMTreeLocator(index, threshold)
    if engine == "original":
        return OriginalLocator(index)
    if engine in ("original_v", "original_s"):
        wanted = VALUE if engine == "original_v" else "subscript"
        if index.strategy != wanted:
            raise UnsupportedStrategyError(f"{engine} needs a {wanted}-sampled index")
        return OriginalLocator(index)
    raise ValueError(f"unknown engine {engine!r}")


# ------------------------------------------------------ single-step API


def locate_original(index: FmIndex, rng: SARange) -> LocateResult:
    return OriginalLocator(index).locate_range(SARange(*rng))


def locate_fmtree(index: FmIndex, pattern: Pattern, rng: SARange, penult: SARange,
                  threshold: int | None = DEFAULT_THRESHOLD, early_stop: bool = True) -> LocateResult:
    return FMTreeLocator(index, threshold, early_stop).locate_range(
        SARange(*rng), SARange(*penult), int(pattern.codes[0]))


def early_leaf(index: FmIndex, penult: SARange, first_char: int) -> set[int]:
    _require_value(index)
    sp, ep = penult
    size = max(ep - sp + 1, 0)
    out, mech, lay, stats = _scratch(size)
    num = early_leaf_kernel(index.kernel_view(), sp, ep, int(first_char), out, mech, lay, 0, stats)
    return set(out[:num].tolist())


def retrieve_sampled(index: FmIndex, rng: SARange, layer: int) -> set[int]:
    _require_value(index)
    sp, ep = rng
    if sp > ep:
        return set()
    out, mech, lay, stats = _scratch(ep - sp + 1)
    num = retrieve_kernel(index.kernel_view(), sp, ep, int(layer), 0, out, mech, lay, 0, stats)
    return set(out[:num].tolist())


def expand_node(index: FmIndex, node: TreeNode) -> list[SARange]:
    """The four child ranges (a, c, g, t order); empty ones are returned as-is."""
    if node.sp > node.ep:
        return []
    child_sp = np.empty(4, np.int64)
    child_ep = np.empty(4, np.int64)
    expand_kernel(index.kernel_view(), node.sp, node.ep, child_sp, child_ep,
                  np.empty(4, np.int64), np.empty(4, np.int64))
    return [SARange(int(a), int(b)) for a, b in zip(child_sp, child_ep)]


def drain_small_range(index: FmIndex, node: TreeNode) -> set[int]:
    _require_value(index)
    if node.sp > node.ep:
        return set()
    out, mech, lay, stats = _scratch(node.ep - node.sp + 1)
    num = drain_kernel(index.kernel_view(), node.sp, node.ep, node.layer, out, mech, lay, 0, stats)
    return set(out[:num].tolist())
