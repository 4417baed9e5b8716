from fractions import Fraction

import pytest

from latentid.fileio import load_spec
from latentid.population import LatentPopulation, Record

# (x1, x2, e1, x*, e2) rows as printed, in printed order
TABLE1 = [
    (0, 0, -1, 1, -1), (0, 1, -1, 1, 0), (0, 2, -1, 1, 1),
    (-1, -1, -1, 0, -1), (-1, 0, -1, 0, 0), (-1, 1, -1, 0, 1),
    (3, 0, 2, 1, -1), (3, 1, 2, 1, 0), (3, 2, 2, 1, 1),
    (2, -1, 2, 0, -1), (2, 0, 2, 0, 0), (2, 1, 2, 0, 1),
]

TABLE1B = [
    (0, -0.5, -1, 1, -1.5), (0, 1.5, -1, 1, 0.5), (0, 2, -1, 1, 1),
    (-1, -1.5, -1, 0, -1.5), (-1, 0.5, -1, 0, 0.5), (-1, 1, -1, 0, 1),
    (1, -0.5, 0, 1, -1.5), (1, 1.5, 0, 1, 0.5), (1, 2, 0, 1, 1),
    (0, -1.5, 0, 0, -1.5), (0, 0.5, 0, 0, 0.5), (0, 1, 0, 0, 1),
]

_CELLS = [(0, 0), (1, 0), (0, 1), (1, 1)]

# (x1, x2, x3, x*) rows as printed
TABLE2 = [
    (x1, x2, x3, xs)
    for x3, xs in ((1, 0), (2, 1), (3, 1), (4, 0))
    for x1, x2 in _CELLS
]

TABLE3 = TABLE2 + [(x1, x2, 4, 1) for x1, x2 in _CELLS]


def printed_population(rows, width):
    p = Fraction(1, len(rows))
    return LatentPopulation(tuple(Record(tuple(r[:width]), r[3], p)
                                  for r in rows))


@pytest.fixture
def table1_rows():
    return TABLE1


@pytest.fixture
def table1b_rows():
    return TABLE1B


@pytest.fixture
def table1_spec():
    return load_spec("table1")[2]


@pytest.fixture
def table1b_spec():
    return load_spec("table1b")[2]


@pytest.fixture
def table2_spec():
    return load_spec("table2")[2]


@pytest.fixture
def table3_spec():
    return load_spec("table3")[2]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
