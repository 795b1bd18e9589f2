"""Shared pytest wiring: a visible PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

import pytest

_acceptance_reports: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    _acceptance_reports.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_reports:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_reports:
        marker = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"{marker:>6}  {name}")
