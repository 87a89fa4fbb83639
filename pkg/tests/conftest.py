from itertools import combinations, product

import numpy as np
import pytest

from sdcc.dataset import builtin_manifest


def brute_members(rows, t):
    """Nested-loop t-way enumeration: set of (factor tuple, value tuple)."""
    out = set()
    for row in rows:
        for f in combinations(range(len(row)), t):
            out.add((f, tuple(int(row[i]) for i in f)))
    return out


def brute_universe(alphabets, t):
    out = set()
    for f in combinations(range(len(alphabets)), t):
        for v in product(*[sorted(alphabets[i]) for i in f]):
            out.add((f, tuple(v)))
    return out


def random_rows(rng, n, d, alphabet):
    return rng.integers(0, alphabet, size=(n, d))


@pytest.fixture(scope="session")
def wine():
    return builtin_manifest("wine").load()


@pytest.fixture(scope="session")
def cancer():
    return builtin_manifest("cancer").load()


@pytest.fixture(scope="session")
def balance():
    return builtin_manifest("balance").load()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance summary ------------------------------------------------------------
# test_acceptance.py appends (criterion, passed, detail) here; the lines are
# printed after the run so they survive output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
