import re
from collections import defaultdict

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results = defaultdict(list)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results[int(m.group(1))].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status = "PASS" if all(_results[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}")
