import math
import time

import pytest

from fractm.function_space import Grid
from fractm.functionals import FunctionalSpec
from fractm.optimize import MaximizeConfig, maximize

#: (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []

MAX_ALPHAS = (0.3 * math.pi, 0.5 * math.pi, 0.7 * math.pi)


def record(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append((criterion, bool(passed), detail))


@pytest.fixture(scope="session")
def grid_4096():
    return Grid(20.0, 4096)


@pytest.fixture(scope="session")
def maximizer_grid():
    return Grid(20.0, 16384)


@pytest.fixture(scope="session")
def maximizers(maximizer_grid):
    """Normalized Adachi-Tanaka maximizers at 0.3pi, 0.5pi, 0.7pi on the fine grid."""
    t0 = time.perf_counter()
    out = {}
    for a in MAX_ALPHAS:
        cfg = MaximizeConfig(a, maximizer_grid)
        out[a] = maximize(FunctionalSpec.of("A_tilde", a), cfg)
    out["elapsed"] = time.perf_counter() - t0
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {crit}: {detail}")
