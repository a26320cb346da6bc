import pytest

# criterion label -> [passed, detail]; filled by tests marked "acceptance"
CRITERIA: dict[str, list] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of the acceptance test under its ``label`` marker."""
    label = request.node.get_closest_marker("label").args[0]
    CRITERIA[label] = [False, "did not finish"]

    def report(detail: str) -> None:
        CRITERIA[label][1] = detail

    yield report
    rep = getattr(request.node, "rep_call", None)
    CRITERIA[label][0] = rep is not None and rep.passed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "label(name): acceptance criterion label")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in CRITERIA:
        passed, detail = CRITERIA[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
