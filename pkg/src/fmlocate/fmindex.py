"""FM-index assembly, backward search and the on-disk format."""
from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass
from typing import BinaryIO, NamedTuple

import numpy as np
from numba import njit

from .errors import (
    BadMagicError,
    ChecksumError,
    IndexFormatError,
    TruncatedIndexError,
    VersionMismatchError,
)
from .rank import (
    BitRankIndex,
    BwtRankIndex,
    bit_get,
    bit_rank,
    build_bit_rank,
    build_bwt_rank,
    bwt_access,
    bwt_rank,
    n_bit_dir,
    n_bit_words,
    n_blocks,
    n_supers,
)
from .suffix import SuffixArray, build_suffix_array, derive_bwt, position_dtype
from .textio import PackedText, Pattern

VALUE = "value"
SUBSCRIPT = "subscript"
STRATEGIES = (VALUE, SUBSCRIPT)

MAGIC = b"FMTI"
VERSION = 1
HEADER = struct.Struct("<4sIQIBQQ5Q")
TRAILER = struct.Struct("<I")
_STRATEGY_CODE = {VALUE: 0, SUBSCRIPT: 1}


class SARange(NamedTuple):
    sp: int
    ep: int

    @property
    def empty(self) -> bool:
        return self.sp > self.ep

    @property
    def size(self) -> int:
        return max(0, self.ep - self.sp + 1)


EMPTY_RANGE = SARange(0, -1)


@dataclass(frozen=True, eq=False)
class SampledSA:
    strategy: str
    D: int
    ssa: np.ndarray
    marks: BitRankIndex | None = None  # bitmap B; value sampling only

    def is_sampled(self, row: int) -> bool:
        if self.strategy == VALUE:
            return self.marks[row]
        return row % self.D == 0

    def sample_at(self, row: int) -> int:
        """SA value of a sampled ``row``."""
        if self.strategy == VALUE:
            return int(self.ssa[self.marks.rank_one(row)])
        return int(self.ssa[row // self.D])

    @property
    def nbytes(self) -> int:
        return self.ssa.nbytes + (self.marks.nbytes if self.marks is not None else 0)


class KernelView(NamedTuple):
    """Flat bundle of index arrays handed to the jitted kernels."""

    words: np.ndarray
    blocks: np.ndarray
    supers: np.ndarray
    C: np.ndarray
    bits: np.ndarray
    bdir: np.ndarray
    ssa: np.ndarray
    n: int
    sentinel_row: int
    D: int
    value: bool


_NO_BITS = np.zeros(0, dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class FmIndex:
    bwt: BwtRankIndex
    sampled: SampledSA
    seed: int = 0

    @property
    def n(self) -> int:
        return self.bwt.n

    @property
    def D(self) -> int:
        return self.sampled.D

    @property
    def strategy(self) -> str:
        return self.sampled.strategy

    @property
    def C(self) -> np.ndarray:
        return self.bwt.C

    @property
    def sentinel_row(self) -> int:
        return self.bwt.sentinel_row

    @property
    def nbytes(self) -> int:
        return self.bwt.nbytes + self.sampled.nbytes

    def kernel_view(self) -> KernelView:
        view = self.__dict__.get("_view")
        if view is None:
            marks = self.sampled.marks
            view = KernelView(
                self.bwt.words,
                self.bwt.blocks,
                self.bwt.supers,
                self.bwt.C,
                marks.bits if marks is not None else _NO_BITS,
                marks.directory if marks is not None else _NO_BITS,
                self.sampled.ssa,
                self.n,
                self.sentinel_row,
                self.D,
                self.strategy == VALUE,
            )
            object.__setattr__(self, "_view", view)
        return view


def sample_suffix_array(sa: SuffixArray, D: int, strategy: str) -> SampledSA:
    if D < 2:
        raise ValueError(f"sampling distance D must be >= 2, got {D}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    entries = sa.entries
    if strategy == VALUE:
        keep = entries % D == 0
        return SampledSA(VALUE, D, entries[keep].copy(), build_bit_rank(keep))
    return SampledSA(SUBSCRIPT, D, entries[::D].copy())


def build_index(
    text: PackedText,
    D: int,
    strategy: str = VALUE,
    seed: int = 0,
    sa: SuffixArray | None = None,
) -> FmIndex:
    """Build an FM-index over ``text``.

    ``sa`` may be passed to reuse one suffix array across several sampling
    configurations of the same text; it is not retained by the index.
    """
    if D < 2:
        raise ValueError(f"sampling distance D must be >= 2, got {D}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    if sa is None:
        sa = build_suffix_array(text)
    elif len(sa) != text.n:
        raise ValueError("suffix array does not match text length")
    bwt = build_bwt_rank(derive_bwt(text, sa), text.n)
    return FmIndex(bwt, sample_suffix_array(sa, D, strategy), seed)


@njit(cache=True, inline="always")
def lf_kernel(v, j):
    c = bwt_access(v.words, v.sentinel_row, j)
    if c < 0:
        return np.int64(0)
    return v.C[c + 1] + bwt_rank(v.words, v.blocks, v.supers, v.sentinel_row, c, j)


@njit(cache=True, inline="always")
def is_sampled_kernel(v, j):
    if v.value:
        return bit_get(v.bits, j)
    return j % v.D == 0


@njit(cache=True, inline="always")
def sample_kernel(v, j):
    """SA value at a sampled row ``j``."""
    if v.value:
        return np.int64(v.ssa[bit_rank(v.bits, v.bdir, j)])
    return np.int64(v.ssa[j // v.D])


@njit(cache=True, inline="always")
def _char_end(v, s):
    if s == 3:
        return v.n
    return v.C[s + 2]


@njit(cache=True, inline="always")
def backward_search_kernel(v, codes, out):
    """Write ``sp, ep`` of ``codes`` and ``sp, ep`` of ``codes[1:]`` into ``out``."""
    m = codes.shape[0]
    s = codes[m - 1]
    psp = np.int64(0)
    pep = v.n - 1
    sp = v.C[s + 1]
    ep = _char_end(v, s) - 1
    i = m - 2
    while i >= 0 and sp <= ep:
        psp = sp
        pep = ep
        s = codes[i]
        sp = v.C[s + 1] + bwt_rank(v.words, v.blocks, v.supers, v.sentinel_row, s, sp)
        ep = v.C[s + 1] + bwt_rank(v.words, v.blocks, v.supers, v.sentinel_row, s, ep + 1) - 1
        i -= 1
    if sp > ep:
        sp = 0
        ep = -1
        if i >= 0:
            psp = 0
            pep = -1
    out[0] = sp
    out[1] = ep
    out[2] = psp
    out[3] = pep


@njit(cache=True)
def backward_search_batch(v, flat, offsets, out):
    """Ranges for every pattern; row ``k`` of ``out`` is ``sp, ep, psp, pep``."""
    for k in range(offsets.shape[0] - 1):
        backward_search_kernel(v, flat[offsets[k]:offsets[k + 1]], out[k])


def lf(index: FmIndex, l: int) -> int:
    if not 0 <= l < index.n:
        raise IndexError(f"row {l} outside 0..{index.n - 1}")
    return int(lf_kernel(index.kernel_view(), l))


def backward_search(index: FmIndex, pattern: Pattern) -> tuple[SARange, SARange]:
    """SA range of ``pattern`` and of ``pattern[1:]``.

    For a one-character pattern the second range is the whole matrix
    ``[0, n - 1]``.  If the search dies before reaching ``pattern[0]`` both
    ranges are empty.
    """
    out = np.empty(4, dtype=np.int64)
    backward_search_kernel(index.kernel_view(), pattern.codes, out)
    return SARange(int(out[0]), int(out[1])), SARange(int(out[2]), int(out[3]))


def count(index: FmIndex, pattern: Pattern) -> int:
    return backward_search(index, pattern)[0].size


def _header(index: FmIndex) -> bytes:
    return HEADER.pack(
        MAGIC,
        VERSION,
        index.n,
        index.D,
        _STRATEGY_CODE[index.strategy],
        index.sentinel_row,
        index.seed & 0xFFFFFFFFFFFFFFFF,
        *(int(c) for c in index.C),
    )


def _body_layout(n: int, D: int, strategy: str):
    """(name, dtype, shape) for each array section in file order."""
    n_samples = -(-n // D)
    layout = [
        ("words", "<u8", (2 * n_blocks(n),)),
        ("supers", "<u8", (n_supers(n), 4)),
        ("blocks", "<u4", (n_blocks(n), 4)),
    ]
    if strategy == VALUE:
        layout += [
            ("bits", "<u8", (n_bit_words(n),)),
            ("bdir", "<u8", (n_bit_dir(n),)),
        ]
    ssa_dtype = "<u4" if position_dtype(n) == np.uint32 else "<u8"
    layout.append(("ssa", ssa_dtype, (n_samples,)))
    return layout


def to_bytes(index: FmIndex) -> bytes:
    buf = io.BytesIO()
    serialize(index, buf)
    return buf.getvalue()


def serialize(index: FmIndex, sink: BinaryIO) -> int:
    """Write ``index`` to a binary sink; returns the number of bytes written."""
    view = index.kernel_view()
    arrays = {
        "words": view.words,
        "supers": view.supers,
        "blocks": view.blocks,
        "bits": view.bits,
        "bdir": view.bdir,
        "ssa": view.ssa,
    }
    chunks = [_header(index)]
    for name, dtype, shape in _body_layout(index.n, index.D, index.strategy):
        arr = arrays[name]
        if arr.shape != shape:
            raise IndexFormatError(f"section {name} has shape {arr.shape}, expected {shape}")
        chunks.append(np.ascontiguousarray(arr, dtype=dtype).tobytes())
    crc = 0
    for chunk in chunks:
        crc = zlib.crc32(chunk, crc)
        sink.write(chunk)
    sink.write(TRAILER.pack(crc))
    return sum(map(len, chunks)) + TRAILER.size


def from_bytes(data) -> FmIndex:
    return deserialize(io.BytesIO(data))


def deserialize(source: BinaryIO) -> FmIndex:
    data = bytearray(source.read())
    if len(data) < 4 or bytes(data[:4]) != MAGIC:
        raise BadMagicError("not an FM-index file (bad magic)")
    if len(data) < HEADER.size:
        raise TruncatedIndexError("index header is truncated")
    magic, version, n, D, strategy_code, sentinel_row, seed, *C = HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionMismatchError(f"index format version {version}, this build reads {VERSION}")
    if strategy_code not in (0, 1):
        raise IndexFormatError(f"unknown sampling strategy code {strategy_code}")
    strategy = STRATEGIES[strategy_code]
    if n < 1 or D < 2 or sentinel_row >= n:
        raise IndexFormatError(f"inconsistent header (n={n}, D={D}, sentinel_row={sentinel_row})")

    layout = _body_layout(n, D, strategy)
    expected = HEADER.size + sum(
        np.dtype(dt).itemsize * int(np.prod(shape)) for _, dt, shape in layout
    ) + TRAILER.size
    if len(data) < expected:
        raise TruncatedIndexError(f"index is truncated ({len(data)} of {expected} bytes)")
    if len(data) > expected:
        raise IndexFormatError(f"{len(data) - expected} unexpected trailing bytes")
    (stored_crc,) = TRAILER.unpack_from(data, expected - TRAILER.size)
    if zlib.crc32(memoryview(data)[: expected - TRAILER.size]) != stored_crc:
        raise ChecksumError("index checksum mismatch")

    sections = {}
    offset = HEADER.size
    for name, dtype, shape in layout:
        count_ = int(np.prod(shape))
        arr = np.frombuffer(data, dtype=dtype, count=count_, offset=offset).reshape(shape)
        # copy: sections start at unaligned offsets
        sections[name] = arr.astype(np.dtype(dtype).newbyteorder("="))
        offset += arr.nbytes

    bwt = BwtRankIndex(
        words=sections["words"],
        blocks=sections["blocks"],
        supers=sections["supers"],
        C=np.array(C, dtype=np.int64),
        sentinel_row=int(sentinel_row),
        n=int(n),
    )
    marks = BitRankIndex(sections["bits"], sections["bdir"], int(n)) if strategy == VALUE else None
    sampled = SampledSA(strategy, int(D), sections["ssa"], marks)
    index = FmIndex(bwt, sampled, int(seed))
    _check_loaded(index)
    return index


def _check_loaded(index: FmIndex) -> None:
    C = index.C
    if C[0] != 0 or C[1] != 1 or np.any(np.diff(C) < 0) or C[4] > index.n:
        raise IndexFormatError("corrupt C array")
    sampled = index.sampled
    row = index.sentinel_row
    if sampled.strategy == VALUE and not sampled.is_sampled(row):
        raise IndexFormatError("sentinel row is not marked as sampled")
    if sampled.is_sampled(row) and sampled.sample_at(row) != 0:
        raise IndexFormatError("sentinel row is inconsistent with the sampled suffix array")
    if sampled.strategy == VALUE and sampled.marks.ones != sampled.ssa.size:
        raise IndexFormatError("bitmap population does not match sampled suffix array size")
