import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def triple(G):
    """Plain ``(genus, edges, legs)`` view for the oracles."""
    return tuple(G.genus), tuple(G.edges), tuple(G.legs)


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    key = name[len("test_criterion_"):]
    failed = report.outcome == "failed"
    if report.when == "call" or failed:
        prev = _CRITERIA.get(key)
        _CRITERIA[key] = "FAIL" if failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        num, _, label = key.partition("_")
        terminalreporter.write_line(f"criterion {int(num):2d} {label.replace('_', ' ')}: {_CRITERIA[key]}")
