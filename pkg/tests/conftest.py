import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

from flatconn.series import Series

FIXTURES = Path(__file__).parent / "fixtures"

small_fractions = st.builds(
    Fraction, st.integers(-10, 10), st.integers(1, 10))


@st.composite
def series(draw, nvars=None, prec=None, min_prec=0, max_prec=6):
    n = draw(st.integers(1, 2)) if nvars is None else nvars
    p = draw(st.integers(min_prec, max_prec)) if prec is None else prec
    exps = st.tuples(*[st.integers(0, p)] * n).filter(lambda e: sum(e) <= p)
    coeffs = draw(st.dictionaries(exps, small_fractions, max_size=8))
    return Series(n, p, coeffs)


@st.composite
def series_pair(draw, same_prec=False, **kw):
    a = draw(series(**kw))
    b = draw(series(nvars=a.nvars, prec=a.prec if same_prec else None, **kw))
    return a, b


def perturb_tail(s: Series, rng: random.Random, extra: int = 3) -> Series:
    """Same coefficients up to ``s.prec``, random junk above it, higher precision."""
    coeffs = dict(s.items())
    for _ in range(6):
        e = tuple(rng.randint(0, s.prec + extra) for _ in range(s.nvars))
        if s.prec < sum(e) <= s.prec + extra:
            coeffs[e] = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
    return Series(s.nvars, s.prec + extra, coeffs)


@pytest.fixture
def rng():
    return random.Random(20261016)


# -- acceptance reporting ---------------------------------------------------
# Tests marked ``@pytest.mark.criterion(n, "title")`` get one summary line per
# criterion; a criterion passes only if every test carrying its number passed.

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "parts": []})
    if rep.when == "call" or rep.failed:
        entry["ok"] &= rep.passed
        entry["parts"].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        verdict = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {entry['title']}")
        for name, ok in entry["parts"]:
            if not ok:
                terminalreporter.write_line(f"    failed: {name}")
