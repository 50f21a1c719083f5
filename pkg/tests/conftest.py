import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""
    entry = {"name": request.node.name, "label": None, "detail": ""}

    def record(label, detail=""):
        entry["label"] = label
        entry["detail"] = detail

    yield record
    rep = getattr(request.node, "rep_call", None)
    entry["passed"] = bool(rep and rep.passed)
    if entry["label"] is not None:
        _ACCEPTANCE.append(entry)


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(_ACCEPTANCE, key=lambda e: e["label"]):
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] {e['label']}  {e['detail']}")
