import pytest

from boundmodes.model import CavitySpec, effective_params


@pytest.fixture
def gaas():
    return CavitySpec(a=1.0, b=0.25, d=1.0, eps1=13.0, eps2=1.0)


@pytest.fixture
def silver():
    return CavitySpec(a=1.0, b=0.25, d=1.0, eps1=2.3, eps2=-20.0)


@pytest.fixture
def gaas_params(gaas):
    return effective_params(gaas)


ACCEPTANCE_LINES = []


def record(criterion: str, ok: bool, detail: str = ""):
    """Log one acceptance line and fail the calling test if ``ok`` is false."""
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}".rstrip())
    assert ok, f"{criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
