import pytest

_results: dict[int, dict] = {}


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the test's criterion."""
    mark = request.node.get_closest_marker("criterion")

    def put(text: str) -> None:
        _results.setdefault(mark.args[0], {})["detail"] = text

    return put


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _results.setdefault(n, {})
    entry["title"] = title
    if rep.when == "call" or rep.failed:
        ok = rep.passed and entry.get("ok", True)
        entry["ok"] = ok
        if rep.failed:
            entry["reason"] = rep.longrepr.reprcrash.message.splitlines()[0] if hasattr(
                rep.longrepr, "reprcrash") else str(rep.longrepr).splitlines()[-1]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        e = _results[n]
        status = "PASS" if e.get("ok") else "FAIL"
        line = f"criterion {n}: {status}  {e.get('title', '')}"
        if e.get("detail"):
            line += f"  [{e['detail']}]"
        tr.write_line(line)
        if not e.get("ok") and e.get("reason"):
            tr.write_line(f"    reason: {e['reason']}")
