"""Shared test infrastructure: verdict lines echoed in the run summary."""

VERDICTS: list[str] = []


def record_verdict(name: str, passed: bool, detail: str) -> bool:
    line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
    VERDICTS.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
