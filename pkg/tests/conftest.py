"""Test-wide configuration: one summary line per acceptance check."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results: dict[str, str] = {}
    for key in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(key, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if key == "passed":
                results.setdefault(name, "PASS")
            else:
                results[name] = "FAIL"
    if results:
        terminalreporter.write_sep("-", "acceptance summary")
        for name in sorted(results):
            terminalreporter.write_line(f"[ACCEPTANCE] {name}: {results[name]}")
