import pytest

_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): one acceptance criterion")


@pytest.fixture
def detail(request):
    """Mutable dict a criterion test fills with the figures worth reporting."""
    request.node.detail = {}
    return request.node.detail


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    facts = ", ".join(f"{k}={v}" for k, v in getattr(item, "detail", {}).items())
    status = "PASS" if rep.passed else "FAIL"
    _verdicts[number] = f"criterion {number:>2} {status}  {title}" + (f"  [{facts}]" if facts else "")


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        terminalreporter.write_line(_verdicts[number])
