import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# lines collected by the acceptance suite, printed once at the end of the run
ACCEPTANCE: list[str] = []


def record(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'} {criterion}" + (f" :: {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)


def _pipeline(tmp, level, types, bound=None):
    from flagcert import certify, sdpgen, solver

    problem = sdpgen.assemble(level, "turan", types)
    path = sdpgen.emit(problem, tmp / f"turan{level}.sdpa")
    info = solver.solve_sdpa(path, tmp / f"turan{level}.sol")
    sol = sdpgen.ingest(problem, tmp / f"turan{level}.sol")
    cert, report = certify.round_and_verify(sol, problem, bound=bound)
    return {"problem": problem, "path": path, "info": info, "solution": sol, "cert": cert, "report": report}


@pytest.fixture(scope="session")
def turan5(tmp_path_factory):
    from flagcert.enumeration import type_by_name

    return _pipeline(tmp_path_factory.mktemp("t5"), 5, [type_by_name("1"), type_by_name("3e1")])


@pytest.fixture(scope="session")
def turan6(tmp_path_factory):
    from fractions import Fraction

    return _pipeline(tmp_path_factory.mktemp("t6"), 6, None, bound=Fraction(3, 10))
