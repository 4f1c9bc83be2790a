"""Shared fixtures and the acceptance summary hook."""

from __future__ import annotations

import pytest

from frontier_kpp.kernels import Laplace, TopHat, Triangle, TruncatedGaussian

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def tophat():
    return TopHat(1.0)


@pytest.fixture(params=["tophat", "triangle", "laplace", "gaussian"])
def any_kernel(request):
    return {
        "tophat": TopHat(1.0),
        "triangle": Triangle(1.5),
        "laplace": Laplace(1.0, 6.0),
        "gaussian": TruncatedGaussian(1.0, 4.0),
    }[request.param]
