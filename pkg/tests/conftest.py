"""Pytest configuration and shared fixtures."""

import json

import pytest

from pymmwave.linkmodel import build_link_table
from pymmwave.planner import DeploymentPlanner
from tests.fixtures.sample_data import (
    get_canyon_scenario,
    get_radio_params,
    get_sample_deployment,
    get_street_scenario,
    get_tiny_scenario,
    get_two_site_scenario,
)
from tests.fixtures.scenario_documents import scenario_documents


@pytest.fixture
def radio_params():
    """Fixture providing default radio parameters."""
    return get_radio_params()


@pytest.fixture
def two_site_scenario():
    """Fixture providing the single-grid, two-site scenario (tolerance 0.9)."""
    return get_two_site_scenario()


@pytest.fixture
def street_scenario():
    """Fixture providing the open street scenario."""
    return get_street_scenario()


@pytest.fixture
def canyon_scenario():
    """Fixture providing the scenario with one occluding building."""
    return get_canyon_scenario()


@pytest.fixture(scope="session")
def tiny_scenario():
    """Session-scoped generated tiny scenario."""
    return get_tiny_scenario(seed=1)


@pytest.fixture
def street_link_table(street_scenario):
    """Fixture providing the link table of the street scenario."""
    return build_link_table(street_scenario)


@pytest.fixture
def street_planner(street_scenario):
    """Fixture providing a planner over the street scenario."""
    return DeploymentPlanner(street_scenario)


@pytest.fixture
def sample_deployment():
    """Fixture providing a hand-built deployment over 3 sites and 4 grids."""
    return get_sample_deployment()


@pytest.fixture
def grid_block_document():
    """Fixture providing a grid-block scenario document."""
    return scenario_documents.grid_block


@pytest.fixture
def explicit_grids_document():
    """Fixture providing an explicit-grid scenario document."""
    return scenario_documents.explicit_grids


@pytest.fixture
def temp_json_file(tmp_path):
    """Fixture for writing temporary JSON documents."""
    def _create_json_file(document, filename="scenario.json"):
        path = tmp_path / filename
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return _create_json_file


# Pytest configuration hooks
def pytest_collection_modifyitems(config, items):
    """Modify test collection to add markers automatically."""
    for item in items:
        # Add unit marker to tests in unit directory
        if "unit" in str(item.fspath):
            item.add_marker(pytest.mark.unit)

        # Add integration marker to tests in integration directory
        if "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)

        # Add slow marker to tests with "slow" in name
        if "slow" in item.name.lower():
            item.add_marker(pytest.mark.slow)
