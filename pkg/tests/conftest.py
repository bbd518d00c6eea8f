import numpy as np
import pytest

from fmlocate.oracle import naive_locate, naive_suffix_array, sa_search_locate
from fmlocate.textio import PackedText, Pattern, make_rng

TOY_TEXT = "acgtaacca"

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session", autouse=True)
def oracles_agree():
    """The two brute-force oracles must agree before anything is trusted."""
    rng = make_rng(20240601)
    for _ in range(100):
        n = int(rng.integers(1, 300))
        text = PackedText(rng.integers(0, int(rng.integers(1, 5)), size=n, dtype=np.uint8))
        sa = naive_suffix_array(text)
        L = int(rng.integers(1, min(n, 6) + 1))
        if rng.random() < 0.7:
            o = int(rng.integers(0, n - L + 1))
            P = Pattern(text.codes[o:o + L])
        else:
            P = Pattern(rng.integers(0, 4, size=L, dtype=np.uint8))
        a, b = naive_locate(text, P), sa_search_locate(text, sa, P)
        if a != b:
            pytest.exit(f"oracles disagree on {text.decode()!r} / {P}: {a} vs {b}", returncode=3)


@pytest.fixture(scope="session")
def toy():
    return PackedText.from_string(TOY_TEXT)


@pytest.fixture
def acceptance():
    def record(criterion: int, passed: bool, detail: str = "") -> None:
        ACCEPTANCE[criterion] = (bool(passed), detail)
        print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
