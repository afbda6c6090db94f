import pytest

from advlecam import rng

# Lines appended by tests/test_acceptance.py; echoed after the run so the
# per-criterion verdicts are visible even with output capture on.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(params=rng.available_backends())
def each_backend(request):
    with rng.use_backend(request.param):
        yield request.param
