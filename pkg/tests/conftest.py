"""Prints one PASS/FAIL line per acceptance criterion after the run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py::test_" in rep.nodeid \
                    and getattr(rep, "when", "call") == "call":
                outcomes[rep.nodeid] = status
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(outcomes):
        name = nodeid.split("::test_", 1)[1]
        number, label = name.split("_", 1)
        verdict = "PASS" if outcomes[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(
            f"ACCEPTANCE {int(number)} ({label.replace('_', ' ')}): {verdict}")
