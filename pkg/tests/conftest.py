import pytest

from ragforge.datagen import make_corpus, make_qa


@pytest.fixture(scope="session")
def small_corpus():
    return make_corpus(n_programs=8, seed=7)


@pytest.fixture(scope="session")
def small_qa(small_corpus):
    return make_qa(small_corpus, n_items=10, seed=11)


# one human-readable pass/fail line per acceptance criterion at the end
_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    _ACCEPTANCE_RESULTS[report.nodeid.split("::")[-1]] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{_ACCEPTANCE_RESULTS[name]}  {name}")
