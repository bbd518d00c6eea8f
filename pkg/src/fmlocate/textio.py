"""Loading, normalizing and sampling DNA texts.

Texts are folded onto the alphabet {a, c, g, t} with codes a=0, c=1, g=2,
t=3.  The terminal sentinel ``$`` is logical only: it is counted in ``n`` but
never stored as a code.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

ALPHABET = b"acgt"
SIGMA = 4

_INVALID = 255
_CODE_OF = np.full(256, _INVALID, dtype=np.uint8)
for _code, _ch in enumerate(ALPHABET):
    _CODE_OF[_ch] = _code
    _CODE_OF[ord(chr(_ch).upper())] = _code


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator used for every seeded draw in the package."""
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class RawText:
    data: bytes
    source_format: str = "plain"

    def __post_init__(self):
        if not self.data:
            raise DataError("text is empty")


@dataclass(frozen=True, eq=False)
class PackedText:
    """Normalized text: one 2-bit code per byte, sentinel implied at ``n - 1``."""

    codes: np.ndarray

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.uint8)
        if codes.size and codes.max() > 3:
            raise ValueError("codes must lie in 0..3")
        object.__setattr__(self, "codes", codes)

    @property
    def n(self) -> int:
        return int(self.codes.size) + 1

    @property
    def sentinel_pos(self) -> int:
        return int(self.codes.size)

    def __len__(self) -> int:
        return self.n

    def decode(self) -> str:
        return decode(self.codes)

    @classmethod
    def from_string(cls, s: str) -> "PackedText":
        """Exact encoding of an a/c/g/t string (a trailing ``$`` is dropped)."""
        return cls(encode(s.rstrip("$")))


@dataclass(frozen=True, eq=False)
class Pattern:
    codes: np.ndarray

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.uint8)
        if codes.size == 0:
            raise DataError("pattern must be non-empty")
        if codes.max() > 3:
            raise ValueError("pattern codes must lie in 0..3")
        object.__setattr__(self, "codes", codes)

    def __len__(self) -> int:
        return int(self.codes.size)

    def __str__(self) -> str:
        return decode(self.codes)

    def __repr__(self) -> str:
        return f"Pattern({decode(self.codes)!r})"

    def __eq__(self, other):
        if not isinstance(other, Pattern):
            return NotImplemented
        return np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash(self.codes.tobytes())

    @classmethod
    def from_string(cls, s: str | bytes) -> "Pattern":
        return cls(encode(s))


def encode(s: str | bytes) -> np.ndarray:
    """Strictly encode a/c/g/t (either case); anything else raises DataError."""
    if isinstance(s, str):
        s = s.encode("ascii", errors="replace")
    codes = _CODE_OF[np.frombuffer(s, dtype=np.uint8)]
    bad = np.flatnonzero(codes == _INVALID)
    if bad.size:
        raise DataError(f"invalid character {chr(s[bad[0]])!r} at offset {bad[0]}")
    return codes


def decode(codes) -> str:
    return bytes(np.frombuffer(ALPHABET, dtype=np.uint8)[np.asarray(codes)]).decode()


def load_text(path, format: str = "plain") -> RawText:
    """Read a plain or FASTA file into a single byte string.

    FASTA records are concatenated in file order with headers and line
    breaks removed; no separator is inserted between records.
    """
    if format not in ("plain", "fasta"):
        raise ValueError(f"unknown format {format!r}")
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not data:
        raise DataError(f"{path} is empty")

    if format == "plain":
        data = data.rstrip(b"\r\n")
    else:
        stripped = data.lstrip()
        if not stripped.startswith(b">"):
            raise DataError(f"{path}: malformed FASTA, expected '>' as first character")
        chunks = []
        for line in stripped.splitlines():
            if not line.startswith(b">"):
                chunks.append(line.strip())
        data = b"".join(chunks)
    if not data:
        raise DataError(f"{path} contains no sequence data")
    return RawText(data, format)


def normalize(raw: RawText, seed: int = 0) -> PackedText:
    """Fold case and replace every non-ACGT byte with a seeded random base."""
    codes = _CODE_OF[np.frombuffer(raw.data, dtype=np.uint8)]
    unknown = codes == _INVALID
    n_unknown = int(np.count_nonzero(unknown))
    if n_unknown:
        codes[unknown] = make_rng(seed).integers(0, SIGMA, size=n_unknown, dtype=np.uint8)
    return PackedText(codes)


def random_text(length: int, seed: int) -> PackedText:
    """Uniform i.i.d. text, used where no real corpus is supplied."""
    return PackedText(make_rng(seed).integers(0, SIGMA, size=length, dtype=np.uint8))


def extract_patterns(text: PackedText, count: int, length: int, seed: int) -> list[Pattern]:
    """Draw ``count`` substrings of ``length`` at uniform random text offsets."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 1 <= length <= text.n - 1:
        raise ValueError(f"pattern length {length} exceeds text length {text.n - 1}")
    last = text.n - 1 - length
    offsets = make_rng(seed).integers(0, last, size=count, endpoint=True)
    return [Pattern(text.codes[o:o + length]) for o in offsets]
