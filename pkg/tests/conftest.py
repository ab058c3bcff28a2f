import pytest

from isac_nd.config import ScenarioConfig

VERDICTS: list[str] = []


@pytest.fixture
def small_config() -> ScenarioConfig:
    return ScenarioConfig(n_nodes=8, beamwidth_deg=90, replications=4)


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if ok else 'FAIL'} - {detail}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
