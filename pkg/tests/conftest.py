import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from consentkit.serialization import load_template  # noqa: E402

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"


@pytest.fixture
def example_record():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_template("example-record")


@pytest.fixture
def example_receipt():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_template("example-receipt")


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects the one-line verdicts printed after the run."""
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
