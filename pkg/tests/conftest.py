"""Prints a one-line verdict per acceptance criterion at the end of the run."""

import pytest

_VERDICTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = getattr(item.function, "criterion", None)
    if label is not None and (rep.when == "call" or rep.failed):
        _VERDICTS[label] = ("PASS" if rep.passed else "FAIL", rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_VERDICTS, key=lambda s: int(s.split(".")[0])):
        verdict, secs = _VERDICTS[label]
        terminalreporter.write_line(f"{verdict}  {label}  ({secs:.2f}s)")
