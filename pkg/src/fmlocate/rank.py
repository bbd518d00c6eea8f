"""Constant-time rank over the packed BWT and over the sampling bitmap.

BWT layout: 2 bits per character, 32 characters per little-endian ``uint64``
word, character ``i`` in word ``i >> 5`` at bit ``2 * (i & 31)``.  Every 64
characters (two words) form a block with four ``uint32`` counts relative to
the enclosing superblock; superblocks hold absolute ``uint64`` counts every
2**16 characters.  The ``$`` slot stores code 0 and is subtracted from
``rank_a`` past ``sentinel_row``.

Bitmap layout: bit ``i`` in word ``i >> 6``; one absolute ``uint64`` count
per 512 bits.

All ranks are exclusive: ``rank(s, l)`` counts ``s`` in ``BWT[0, l - 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .suffix import BwtString

SENTINEL = -1

BLOCK_SHIFT = 6
SUPER_SHIFT = 16
BIT_DIR_SHIFT = 9

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)
_REPEAT = np.array(
    [0, 0x5555555555555555, 0xAAAAAAAAAAAAAAAA, 0xFFFFFFFFFFFFFFFF], dtype=np.uint64
)


@njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True, inline="always")
def _lane_mask(lanes):
    # low bit of each of the first ``lanes`` 2-bit lanes
    if lanes >= 32:
        return _M1
    return ((_ONE << np.uint64(2 * lanes)) - _ONE) & _M1


@njit(cache=True, inline="always")
def _count_in_word(word, s, lanes):
    x = word ^ _REPEAT[s]
    eq = ~(x | (x >> np.uint64(1))) & _lane_mask(lanes)
    return popcount64(eq)


@njit(cache=True, inline="always")
def bwt_rank(words, blocks, supers, sentinel_row, s, l):
    b = l >> BLOCK_SHIFT
    r = l & 63
    cnt = np.int64(supers[l >> SUPER_SHIFT, s]) + np.int64(blocks[b, s])
    if r <= 32:
        cnt += _count_in_word(words[2 * b], s, r)
    else:
        cnt += _count_in_word(words[2 * b], s, 32)
        cnt += _count_in_word(words[2 * b + 1], s, r - 32)
    if s == 0 and l > sentinel_row:
        cnt -= 1
    return cnt


@njit(cache=True, inline="always")
def _tally_word(word, lanes, out):
    mk = _lane_mask(lanes)
    lo = word & mk
    hi = (word >> np.uint64(1)) & mk
    c3 = popcount64(hi & lo)
    c2 = popcount64(hi & ~lo)
    c1 = popcount64(lo & ~hi)
    out[0] += lanes - c1 - c2 - c3
    out[1] += c1
    out[2] += c2
    out[3] += c3


@njit(cache=True, inline="always")
def bwt_rank_all(words, blocks, supers, sentinel_row, l, out):
    """All four ranks at ``l`` with a single block visit."""
    b = l >> BLOCK_SHIFT
    r = l & 63
    sb = l >> SUPER_SHIFT
    for s in range(4):
        out[s] = np.int64(supers[sb, s]) + np.int64(blocks[b, s])
    if r <= 32:
        _tally_word(words[2 * b], r, out)
    else:
        _tally_word(words[2 * b], 32, out)
        _tally_word(words[2 * b + 1], r - 32, out)
    if l > sentinel_row:
        out[0] -= 1


@njit(cache=True, inline="always")
def bwt_access(words, sentinel_row, l):
    if l == sentinel_row:
        return SENTINEL
    return np.int64((words[l >> 5] >> np.uint64(2 * (l & 31))) & np.uint64(3))


@njit(cache=True, inline="always")
def bit_get(bits, j):
    return ((bits[j >> 6] >> np.uint64(j & 63)) & _ONE) != 0


@njit(cache=True, inline="always")
def bit_rank(bits, bdir, l):
    w = l >> 6
    d = l >> BIT_DIR_SHIFT
    cnt = np.int64(bdir[d])
    for k in range(d << 3, w):
        cnt += popcount64(bits[k])
    r = l & 63
    if r:
        cnt += popcount64(bits[w] & ((_ONE << np.uint64(r)) - _ONE))
    return cnt


@dataclass(frozen=True, eq=False)
class BwtRankIndex:
    words: np.ndarray  # uint64, 2 per block
    blocks: np.ndarray  # uint32 (nblocks, 4), relative to superblock
    supers: np.ndarray  # uint64 (nsupers, 4), absolute
    C: np.ndarray  # int64 [$, a, c, g, t]
    sentinel_row: int
    n: int

    def rank(self, s: int, l: int) -> int:
        if not 0 <= s < 4:
            raise ValueError(f"character code {s} out of range")
        if not 0 <= l <= self.n:
            raise IndexError(f"rank position {l} outside 0..{self.n}")
        return int(bwt_rank(self.words, self.blocks, self.supers, self.sentinel_row, s, l))

    def rank_all(self, l: int) -> np.ndarray:
        if not 0 <= l <= self.n:
            raise IndexError(f"rank position {l} outside 0..{self.n}")
        out = np.zeros(4, dtype=np.int64)
        bwt_rank_all(self.words, self.blocks, self.supers, self.sentinel_row, l, out)
        return out

    def access(self, l: int) -> int:
        if not 0 <= l < self.n:
            raise IndexError(f"BWT position {l} outside 0..{self.n - 1}")
        return int(bwt_access(self.words, self.sentinel_row, l))

    def codes(self) -> np.ndarray:
        """Unpacked length-``n`` codes (sentinel slot holds 0)."""
        lanes = self.words[:, None] >> (2 * np.arange(32, dtype=np.uint64))
        return (lanes & np.uint64(3)).astype(np.uint8).ravel()[: self.n]

    @property
    def nbytes(self) -> int:
        return self.words.nbytes + self.blocks.nbytes + self.supers.nbytes


@dataclass(frozen=True, eq=False)
class BitRankIndex:
    bits: np.ndarray  # uint64 words
    directory: np.ndarray  # uint64, ones before each 512-bit block
    n: int

    def rank_one(self, l: int) -> int:
        if not 0 <= l <= self.n:
            raise IndexError(f"rank position {l} outside 0..{self.n}")
        return int(bit_rank(self.bits, self.directory, l))

    def __getitem__(self, j: int) -> bool:
        if not 0 <= j < self.n:
            raise IndexError(j)
        return bool((int(self.bits[j >> 6]) >> (j & 63)) & 1)

    def to_bools(self) -> np.ndarray:
        return np.unpackbits(self.bits.view(np.uint8), bitorder="little")[: self.n].astype(bool)

    @property
    def ones(self) -> int:
        return self.rank_one(self.n)

    @property
    def nbytes(self) -> int:
        return self.bits.nbytes + self.directory.nbytes


def n_blocks(n: int) -> int:
    return (n >> BLOCK_SHIFT) + 1


def n_supers(n: int) -> int:
    return (n >> SUPER_SHIFT) + 1


def n_bit_words(n: int) -> int:
    return (n >> 6) + 1


def n_bit_dir(n: int) -> int:
    return (n_bit_words(n) >> 3) + 1


def pack_codes(codes: np.ndarray, n: int) -> np.ndarray:
    padded = np.zeros(n_blocks(n) * 64, dtype=np.uint64)
    padded[:n] = codes
    lanes = padded.reshape(-1, 32) << (2 * np.arange(32, dtype=np.uint64))
    return np.bitwise_or.reduce(lanes, axis=1)


def build_bwt_rank(bwt: BwtString, n: int) -> BwtRankIndex:
    if bwt.n != n:
        raise ValueError(f"BWT has {bwt.n} rows, expected {n}")
    full = bwt.full_codes()
    nb = n_blocks(n)
    padded = np.zeros(nb * 64, dtype=np.uint8)
    padded[:n] = full
    per_block = np.stack(
        [np.count_nonzero(padded.reshape(nb, 64) == c, axis=1) for c in range(4)], axis=1
    ).astype(np.int64)
    cum = np.zeros_like(per_block)
    np.cumsum(per_block[:-1], axis=0, out=cum[1:])
    supers = cum[:: 1 << (SUPER_SHIFT - BLOCK_SHIFT)].copy()
    rel = cum - supers[np.arange(nb) >> (SUPER_SHIFT - BLOCK_SHIFT)]

    counts = np.bincount(bwt.codes, minlength=4).astype(np.int64)
    C = np.zeros(5, dtype=np.int64)
    C[1] = 1
    C[2:] = 1 + np.cumsum(counts[:3])
    return BwtRankIndex(
        words=pack_codes(full, n),
        blocks=rel.astype(np.uint32),
        supers=supers.astype(np.uint64),
        C=C,
        sentinel_row=int(bwt.sentinel_row),
        n=n,
    )


def build_bit_rank(bits) -> BitRankIndex:
    bits = np.asarray(bits, dtype=bool)
    n = int(bits.size)
    nw = n_bit_words(n)
    raw = np.zeros(nw * 8, dtype=np.uint8)
    packed = np.packbits(bits, bitorder="little")
    raw[: packed.size] = packed
    words = raw.view("<u8").astype(np.uint64)
    per_word = np.bitwise_count(words).astype(np.uint64)
    padded = np.zeros(n_bit_dir(n) * 8, dtype=np.uint64)
    padded[:nw] = per_word
    per_block = padded.reshape(-1, 8).sum(axis=1)
    directory = np.zeros_like(per_block)
    np.cumsum(per_block[:-1], out=directory[1:])
    return BitRankIndex(words, directory, n)


def rank_char(idx: BwtRankIndex, s: int, l: int) -> int:
    return idx.rank(s, l)


def access_bwt(idx: BwtRankIndex, l: int) -> int:
    return idx.access(l)


def rank_one(idx: BitRankIndex, l: int) -> int:
    return idx.rank_one(l)
