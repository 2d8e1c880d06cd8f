import pytest

# criterion id -> (title, outcome, detail)
_CRITERIA: dict[str, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        cid, title = marker.args
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        if report.passed and not hasattr(report, "wasxfail"):
            status = "PASS"
        elif hasattr(report, "wasxfail"):
            status = "FAIL (expected, see decisions ledger)"
        else:
            status = "FAIL"
        _CRITERIA[cid] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        title, status, detail = _CRITERIA[cid]
        line = f"[{status}] {cid}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
