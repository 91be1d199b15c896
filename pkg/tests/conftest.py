import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(scope="session")
def depth2_tree():
    from liminf.cantor import build_tree

    return build_tree("all", 1, "7/2", "1/4", depth=2, nu_hat=1.0)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _record(label: str, passed: bool, detail: str = "") -> bool:
        line = f"{label}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
