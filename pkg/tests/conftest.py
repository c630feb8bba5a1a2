import numpy as np
import pytest

from qcspin import reservoir as rm


@pytest.fixture
def g0():
    """Unit-norm radial form factor with alpha = 0, omega_c = 1."""
    return rm.PaperRadial(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance results: (criterion, part, passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def accept():
    def record(criterion, part, passed, detail):
        ACCEPTANCE.append((criterion, part, bool(passed), detail))
        print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    order = []
    for c, *_ in ACCEPTANCE:
        if c not in order:
            order.append(c)
    for c in sorted(order):
        parts = [p for p in ACCEPTANCE if p[0] == c]
        ok = all(p[2] for p in parts)
        tr.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}")
        for _, part, passed, detail in parts:
            tr.write_line(f"    {part}: {'PASS' if passed else 'FAIL'} {detail}")
