"""Shared hypothesis strategies and helpers."""

from fractions import Fraction

import pytest
from hypothesis import strategies as st

from accumalg import fixtures
from accumalg.polyalg import Polynomial, avar, bvar

# a small pool of L=3 variables used by the random-polynomial strategies
POOL = [avar(0b000, 0b100, 3), avar(0b001, 0b101, 3), bvar(0b011, 0b111, 3), bvar(0b101, 0b111, 3)]

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
unit_rationals = st.fractions(min_value=0, max_value=1, max_denominator=50)


@st.composite
def polynomials(draw, max_terms: int = 5, max_degree: int = 3):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exps = draw(st.lists(st.integers(0, max_degree), min_size=len(POOL), max_size=len(POOL)))
        if sum(exps) > max_degree:
            continue
        mono = tuple((v, e) for v, e in zip(POOL, exps) if e)
        terms[mono] = terms.get(mono, 0) + draw(rationals)
    return Polynomial(terms)


points = st.fixed_dictionaries({v: unit_rationals for v in POOL})


def const(c) -> Polynomial:
    return Polynomial.constant(Fraction(c))


@pytest.fixture(scope="session")
def toy():
    return fixtures.toy_dataset()


@pytest.fixture(scope="session")
def components():
    return fixtures.toy_components()


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    """Store one acceptance outcome for the end-of-run report."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: (len(k.split()[0]), k)):
        outcomes = ACCEPTANCE[name]
        verdict = "PASS" if all(ok for ok, _ in outcomes) else "FAIL"
        details = "; ".join(d for _, d in outcomes)
        terminalreporter.write_line(f"{verdict}  {name}: {details}")
