import random
from fractions import Fraction

import pytest

from cce_workbench.kernel import jet_of, parse_expr
from cce_workbench.tensors.metric import MetricChart


def rand_poly(rnd, names, deg=2, nterms=3, low=1):
    terms = []
    for _ in range(nterms):
        mon = "*".join(rnd.choice(names) for _ in range(rnd.randint(low, deg)))
        c = Fraction(rnd.randint(-3, 3), rnd.randint(1, 3))
        terms.append(f"({c})*{mon}")
    return " + ".join(terms)


def jet_metric(seed, names, order, deg=2):
    """delta + random polynomial entries, as jets at the origin."""
    rnd = random.Random(seed)
    n = len(names)
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            s = ("1 + " if i == j else "0 + ") + rand_poly(rnd, names, deg)
            rows[i][j] = rows[j][i] = jet_of(parse_expr(s, names), names, order)
    return MetricChart(rows, names)


def rational_metric(seed, names, scale=Fraction(1, 4)):
    """diagonal-dominant metric with polynomial entries and one rational entry."""
    rnd = random.Random(seed)
    n = len(names)
    rows = [["0"] * n for _ in range(n)]
    special = rnd.randrange(n)
    for i in range(n):
        a = rnd.choice(names)
        rows[i][i] = f"(2 + {a}^2)/(1 + {a}^2)" if i == special else f"1 + ({scale})*{a}^2"
    i, j = rnd.sample(range(n), 2)
    rows[i][j] = rows[j][i] = f"({scale})*{rnd.choice(names)}"
    return MetricChart.from_strings(rows, names)


@pytest.fixture
def coords4():
    return ("x0", "x1", "x2", "x3")


# criterion -> (passed, title, seconds, limit), filled by the acceptance suite
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0]), k)):
        ok, title, dt, limit = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {title}  ({dt:.1f} s, limit {limit} s)")
