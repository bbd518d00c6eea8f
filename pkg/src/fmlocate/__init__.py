"""FM-index over DNA texts with count, one-by-one locate and quadtree locate."""
from .errors import (
    BadMagicError,
    ChecksumError,
    DataError,
    FmError,
    IndexFormatError,
    InvariantViolation,
    TruncatedIndexError,
    UnsupportedStrategyError,
    VersionMismatchError,
)
from .fmindex import (
    SUBSCRIPT,
    VALUE,
    FmIndex,
    SampledSA,
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
from .locate import (
    DEFAULT_THRESHOLD,
    FMTreeLocator,
    LocateResult,
    LocateStats,
    OriginalLocator,
    TreeNode,
    drain_small_range,
    early_leaf,
    expand_node,
    locate_fmtree,
    locate_original,
    make_locator,
    retrieve_sampled,
)
from .oracle import naive_count, naive_locate
from .rank import BitRankIndex, BwtRankIndex, build_bit_rank, build_bwt_rank
from .suffix import BwtString, SuffixArray, build_suffix_array, derive_bwt
from .textio import PackedText, Pattern, RawText, extract_patterns, load_text, normalize

__version__ = "0.1.0"

__all__ = [
    "BadMagicError", "ChecksumError", "DataError", "FmError", "IndexFormatError",
    "InvariantViolation", "TruncatedIndexError", "UnsupportedStrategyError",
    "VersionMismatchError",
    "SUBSCRIPT", "VALUE", "FmIndex", "SampledSA", "SARange", "backward_search",
    "build_index", "count", "deserialize", "from_bytes", "lf", "serialize", "to_bytes",
    "DEFAULT_THRESHOLD", "FMTreeLocator", "LocateResult", "LocateStats", "OriginalLocator",
    "TreeNode", "drain_small_range", "early_leaf", "expand_node", "locate_fmtree",
    "locate_original", "make_locator", "retrieve_sampled",
    "naive_count", "naive_locate",
    "BitRankIndex", "BwtRankIndex", "build_bit_rank", "build_bwt_rank",
    "BwtString", "SuffixArray", "build_suffix_array", "derive_bwt",
    "PackedText", "Pattern", "RawText", "extract_patterns", "load_text", "normalize",
]
