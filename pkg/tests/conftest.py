from __future__ import annotations

import sys


def pytest_terminal_summary(terminalreporter):
    results = None
    for module in list(sys.modules.values()):
        results = getattr(module, "ACCEPTANCE_RESULTS", None)
        if results:
            break
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, title, detail = results[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}: {detail}")
