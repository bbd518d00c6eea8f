"""``fmlocate`` command line: build, locate, bench and selftest.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    FmError,
    IndexFormatError,
    InvariantViolation,
    UnsupportedStrategyError,
)
from .fmindex import (
    STRATEGIES,
    SUBSCRIPT,
    VALUE,
    build_index,
    deserialize,
    serialize,
    to_bytes,
)
from .locate import (
    DEFAULT_THRESHOLD,
    FMTreeLocator,
    OriginalLocator,
    make_locator,
    pack_patterns,
    search_many,
)
from .suffix import build_suffix_array
from .textio import (
    Pattern,
    decode,
    encode,
    extract_patterns,
    load_text,
    normalize,
    random_text,
)
from .verify import find_failing_pattern, minimize, run_suite, single_mismatch

log = logging.getLogger("fmlocate")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3

ENGINES = ("fmtree", "original_v", "original_s")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class BenchRecord:
    engine: str
    D: int
    pattern_length: int
    pattern_count: int
    total_occ: int
    count_time_ns: int
    locate_time_ns: int
    index_bytes: int
    bits_per_char: float


BENCH_COLUMNS = [f.name for f in fields(BenchRecord)]


# ---------------------------------------------------------------- arg types


def _threshold(s: str) -> int | None:
    if s.lower() in ("inf", "infinity", "none"):
        return None
    try:
        value = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'inf', got {s!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("threshold must be >= 0")
    return value


def _positive(s: str) -> int:
    try:
        value = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value >= 1, got {value}")
    return value


def _int_list(s: str) -> list[int]:
    """``"2,4,6"`` or ``"2-8"`` (inclusive), or a mix of both."""
    out = []
    try:
        for part in s.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like '2,4' or '2-8', got {s!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _engine_list(s: str) -> list[str]:
    names = [x.strip() for x in s.split(",") if x.strip()]
    bad = [x for x in names if x not in ENGINES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"engines must be drawn from {', '.join(ENGINES)}")
    return names


# ---------------------------------------------------------------- build


def cmd_build(args) -> int:
    if args.D < 2:
        raise UsageError(f"-D must be >= 2, got {args.D}")
    raw = load_text(args.input, args.format)
    text = normalize(raw, args.seed)
    t0 = time.perf_counter()
    index = build_index(text, args.D, args.sampling, seed=args.seed)
    out = Path(args.output)
    try:
        with out.open("wb") as fh:
            size = serialize(index, fh)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc.strerror or exc}") from exc
    log.info("built %s: n=%d D=%d %s sampling, %d bytes (%.3f bits/char) in %.2fs",
             out, index.n, index.D, index.strategy, size, 8 * size / index.n,
             time.perf_counter() - t0)
    return EXIT_OK


# ---------------------------------------------------------------- locate


def _read_patterns(path) -> list[tuple[str, Pattern | None, str | None]]:
    """(line text, parsed pattern or None, error message or None) per line."""
    try:
        lines = Path(path).read_bytes().decode("ascii", errors="replace").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    parsed = []
    for line in lines:
        s = line.strip()
        if not s:
            parsed.append((s, None, "empty pattern"))
            continue
        try:
            parsed.append((s, Pattern(encode(s)), None))
        except DataError as exc:
            parsed.append((s, None, str(exc)))
    return parsed


def _locate_chunk(index, engine, threshold, patterns):
    loc = make_locator(index, engine, threshold)
    flat, offsets = pack_patterns(patterns)
    ranges = search_many(index, flat, offsets)
    if isinstance(loc, FMTreeLocator):
        return loc.locate_ranges(ranges, flat[offsets[:-1]])
    return loc.locate_ranges(ranges)


def cmd_locate(args) -> int:
    try:
        with open(args.index, "rb") as fh:
            index = deserialize(fh)
    except OSError as exc:
        raise DataError(f"cannot read {args.index}: {exc.strerror or exc}") from exc
    if args.engine == "fmtree" and index.strategy != VALUE:
        raise UnsupportedStrategyError(
            f"engine fmtree needs a value-sampled index; {args.index} uses {index.strategy} sampling")

    entries = _read_patterns(args.patterns)
    good = [i for i, (_, p, _) in enumerate(entries) if p is not None]
    chunks = np.array_split(np.array(good, dtype=np.int64), min(args.threads, max(len(good), 1)))
    chunks = [c for c in chunks if c.size]

    def work(chunk):
        return _locate_chunk(index, args.engine, args.threshold, [entries[i][1] for i in chunk])

    if args.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            batches = list(pool.map(work, chunks))
    else:
        batches = [work(c) for c in chunks]

    answers = {}
    for chunk, batch in zip(chunks, batches):
        for k, i in enumerate(chunk):
            answers[int(i)] = np.sort(batch.positions_of(k))

    bad_lines = 0
    out = sys.stdout
    for i, (s, _, err) in enumerate(entries):
        if err is not None:
            bad_lines += 1
            print(f"line {i + 1}: {err}", file=sys.stderr)
            continue
        pos = answers[i]
        out.write(f"{s}\t{pos.size}\t{' '.join(map(str, pos.tolist()))}\n")
    out.flush()
    return EXIT_DATA if bad_lines else EXIT_OK


# ---------------------------------------------------------------- bench


def _time_ns(fn):
    t0 = time.perf_counter_ns()
    result = fn()
    return result, time.perf_counter_ns() - t0


def run_bench(text, lengths, per_length, D_list, engines, seed, threshold=DEFAULT_THRESHOLD):
    """One BenchRecord per (engine, D, length).  Each configuration runs an
    untimed warm-up pass over the same batch first."""
    sa = build_suffix_array(text)
    pattern_sets = {L: extract_patterns(text, per_length, L, seed + L) for L in lengths}
    records = []
    for D in D_list:
        needed = {SUBSCRIPT if e == "original_s" else VALUE for e in engines}
        indexes = {s: build_index(text, D, s, seed=seed, sa=sa) for s in sorted(needed)}
        sizes = {s: len(to_bytes(ix)) for s, ix in indexes.items()}
        for engine in engines:
            strategy = SUBSCRIPT if engine == "original_s" else VALUE
            index = indexes[strategy]
            loc = FMTreeLocator(index, threshold) if engine == "fmtree" else OriginalLocator(index)
            for L in lengths:
                flat, offsets = pack_patterns(pattern_sets[L])
                first = flat[offsets[:-1]].astype(np.int64)

                def count_phase():
                    return search_many(index, flat, offsets)

                def locate_phase(ranges):
                    if engine == "fmtree":
                        return loc.locate_ranges(ranges, first)
                    return loc.locate_ranges(ranges)

                locate_phase(count_phase())
                ranges, t_count = _time_ns(count_phase)
                batch, t_locate = _time_ns(lambda: locate_phase(ranges))
                records.append(BenchRecord(
                    engine=engine, D=D, pattern_length=L, pattern_count=len(pattern_sets[L]),
                    total_occ=batch.total_occ, count_time_ns=t_count, locate_time_ns=t_locate,
                    index_bytes=sizes[strategy],
                    bits_per_char=round(8 * sizes[strategy] / text.n, 4),
                ))
                log.info("%s D=%d |P|=%d occ=%d locate=%.3fms", engine, D, L,
                         batch.total_occ, t_locate / 1e6)
    return records


def write_csv(records, sink) -> None:
    writer = csv.DictWriter(sink, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(asdict(r))


def cmd_bench(args) -> int:
    if (args.text is None) == (args.random_length is None):
        raise UsageError("give exactly one of --text or --random-length")
    if any(D < 2 for D in args.D_list):
        raise UsageError("every D must be >= 2")
    if any(L < 1 for L in args.pattern_lengths):
        raise UsageError("pattern lengths must be >= 1")
    if args.text is not None:
        text = normalize(load_text(args.text, args.format), args.seed)
    else:
        text = random_text(args.random_length, args.seed)
    if max(args.pattern_lengths) > text.n - 1:
        raise DataError(f"pattern length {max(args.pattern_lengths)} exceeds text length {text.n - 1}")
    records = run_bench(text, args.pattern_lengths, args.patterns_per_length, args.D_list,
                        args.engines, args.seed, args.threshold)
    if args.csv in (None, "-"):
        write_csv(records, sys.stdout)
    else:
        try:
            with open(args.csv, "w", newline="") as fh:
                write_csv(records, fh)
        except OSError as exc:
            raise DataError(f"cannot write {args.csv}: {exc.strerror or exc}") from exc
    return EXIT_OK


# ---------------------------------------------------------------- selftest


def cmd_selftest(args) -> int:
    sep_bias = 1 if args.inject_fault == "sep" else 0
    t0 = time.perf_counter()
    report = run_suite(args.iterations, args.max_n, args.seed, stop_on_failure=True,
                       fault_sep_bias=sep_bias)
    elapsed = time.perf_counter() - t0
    if report.ok:
        print(f"selftest passed: {report.texts} texts, {report.queries} queries, "
              f"{report.configurations} configurations, {report.positions_checked} positions "
              f"checked, max Original_v walk {report.max_walk_value} ({elapsed:.1f}s)")
        return EXIT_OK

    for check, k in sorted(report.counters.items()):
        print(f"FAIL {check}: {k} violation(s)")
    f = report.failures[0]
    print(f"first failure: {f}")
    engine = f.engine
    if engine not in ("original_v", "original_s") and not engine.startswith("fmtree"):
        engine = "fmtree"
    threshold = f.threshold
    pattern = encode(f.pattern) if f.pattern else None
    if pattern is None or not single_mismatch(f.text, pattern, f.D, engine, threshold, sep_bias):
        pattern = find_failing_pattern(f.text, f.D, engine, threshold, sep_bias)
    if pattern is None:
        print("could not isolate a single failing query; text length "
              f"{f.text.size}, D={f.D}")
        return EXIT_INVARIANT
    small = minimize(f.text, pattern, f.D, engine, threshold, sep_bias)
    th = "inf" if threshold is None else threshold
    print("minimized reproducer:")
    print(f"  text      = {decode(small)}")
    print(f"  pattern   = {decode(pattern)}")
    print(f"  D         = {f.D}")
    print(f"  threshold = {th}")
    print(f"  engine    = {engine}")
    return EXIT_INVARIANT


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fmlocate", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build and serialize an index")
    b.add_argument("--input", required=True)
    b.add_argument("--format", choices=("plain", "fasta"), default="plain")
    b.add_argument("--output", required=True)
    b.add_argument("-D", type=int, default=8, help="sampling distance (>= 2)")
    b.add_argument("--sampling", choices=STRATEGIES, default=VALUE)
    b.add_argument("--seed", type=int, default=0, help="seed for replacing non-ACGT bytes")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("locate", help="report occurrence positions, one pattern per line")
    q.add_argument("--index", required=True)
    q.add_argument("--patterns", required=True)
    q.add_argument("--engine", choices=("fmtree", "original"), default="fmtree")
    q.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD,
                   help="branch-cut size for fmtree; 0 disables, 'inf' drains every node")
    q.add_argument("--threads", type=_positive, default=1)
    q.set_defaults(func=cmd_locate)

    c = sub.add_parser("bench", help="time count and locate, write CSV")
    c.add_argument("--text")
    c.add_argument("--format", choices=("plain", "fasta"), default="plain")
    c.add_argument("--random-length", type=_positive, help="use a seeded random text instead")
    c.add_argument("--pattern-lengths", type=_int_list, default=[5])
    c.add_argument("--patterns-per-length", type=_positive, default=10)
    c.add_argument("--D-list", type=_int_list, default=list(range(2, 9)))
    c.add_argument("--engines", type=_engine_list, default=list(ENGINES))
    c.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--csv", help="output path, '-' or omitted for stdout")
    c.set_defaults(func=cmd_bench)

    s = sub.add_parser("selftest", help="randomized oracle-equivalence run")
    s.add_argument("--max-n", type=_positive, default=500, help="longest random text")
    s.add_argument("--iterations", type=_positive, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inject-fault", choices=("sep",),
                   help="deliberately break the FMtree sampled-range end")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fmlocate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"fmlocate: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, IndexFormatError, UnsupportedStrategyError) as exc:
        print(f"fmlocate: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FmError as exc:
        print(f"fmlocate: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
