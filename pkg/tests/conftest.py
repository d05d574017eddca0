import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title, elapsed, budget, detail = results[number]
        line = f"{status} criterion {number}: {title} ({elapsed:.2f} s of {budget} s)"
        terminalreporter.write_line(line + (f" {detail}" if detail else ""))
