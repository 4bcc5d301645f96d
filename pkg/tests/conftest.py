import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ndrl.crop_env import CropEnv, SoilParams, generate_weather  # noqa: E402
from ndrl.crop_env.weather import PROFILES  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def dry_weather():
    return generate_weather(2023, "dry2023")


@pytest.fixture(scope="session")
def wet_weather():
    return generate_weather(2024, "wet2024")


@pytest.fixture(scope="session")
def params():
    return SoilParams()


@pytest.fixture
def dry_env(dry_weather, params):
    prof = PROFILES["dry2023"]
    return CropEnv(dry_weather, params, prof.event_doys, prof.year)


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
