from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def cat_e():
    from foldskit.catalog import builtin_signature

    return builtin_signature("cat+E")


@pytest.fixture(scope="session")
def rg():
    from foldskit.catalog import builtin_signature

    return builtin_signature("rg")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Print and remember one ``criterion N: PASS|FAIL`` line."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
