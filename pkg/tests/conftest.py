import pytest

from lambdasx.bases import scoped_registry


@pytest.fixture(autouse=True)
def fresh_registry():
    with scoped_registry() as reg:
        yield reg


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS:
            terminalreporter.write_line(line)
