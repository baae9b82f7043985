import re
from collections import OrderedDict

_RESULTS = OrderedDict()
_NAME = re.compile(r"test_acceptance\.py::test_c(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _RESULTS.setdefault(int(m.group(1)), []).append((m.group(2), report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        checks = _RESULTS[crit]
        ok = all(passed for _, passed, _ in checks)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for name, passed, detail in checks:
            tr.write_line(f"    {'pass' if passed else 'FAIL'}  {name}  {detail}")
