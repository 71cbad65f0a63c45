from pathlib import Path

import pytest

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(scope="session")
def locked_bundle():
    from opasim.scenario import load_scenario

    return load_scenario(SCENARIO_DIR / "zero_span_locked.scenario")


@pytest.fixture(scope="session")
def scanned_bundle():
    from opasim.scenario import load_scenario

    return load_scenario(SCENARIO_DIR / "zero_span_scanned.scenario")
