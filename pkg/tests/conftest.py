import numpy as np
import pytest
from hypothesis import strategies as st

from umine.udb import MiningParams, UncertainDatabase, parse_udb

TOY_UDB = (
    "1:0.8 2:0.2 3:0.9 4:0.7 6:0.8\n"
    "1:0.8 2:0.7 3:0.9 5:0.5\n"
    "1:0.5 3:0.8 5:0.8 6:0.3\n"
    "2:0.5 4:0.5 6:0.7\n"
)
A, B, C, D, E, F = 1, 2, 3, 4, 5, 6


@pytest.fixture
def toy():
    return parse_udb(TOY_UDB)


def random_db(rng, max_n=12, max_items=6, p_zero=0.0):
    """Random small database: N <= max_n, up to max_items items, p in (0, 1]."""
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_items + 1))
    rows = []
    for _ in range(n):
        k = int(rng.integers(0, m + 1))
        items = sorted(rng.choice(m, k, replace=False).tolist())
        rows.append([(i, float(1.0 - rng.random())) for i in items])
    return UncertainDatabase.from_transactions(rows)


def random_params(rng):
    return MiningParams(min_esup=float(rng.uniform(0.05, 1.0)),
                        min_sup=float(rng.uniform(0.05, 1.0)),
                        pft=float(rng.uniform(0.05, 0.95)))


@st.composite
def small_dbs(draw, max_n=8, max_items=5):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_items))
    prob = st.floats(0.01, 1.0, allow_nan=False)
    rows = []
    for _ in range(n):
        items = draw(st.sets(st.integers(0, m - 1), max_size=m))
        rows.append([(i, draw(prob)) for i in sorted(items)])
    return UncertainDatabase.from_transactions(rows)


params_strategy = st.builds(
    MiningParams,
    min_esup=st.floats(0.05, 1.0),
    min_sup=st.floats(0.05, 1.0),
    pft=st.floats(0.05, 0.95),
)


# acceptance lines, printed once at the end of the session
ACCEPTANCE_LINES: dict = {}


def record_acceptance(number: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
