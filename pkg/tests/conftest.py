from __future__ import annotations

import pytest

from simsforge.catalog import AspectCatalog, load_catalog, sample_spec
from simsforge.persona import CharacterRecord, forge_character
from simsforge.provider.mock import MockProvider
from simsforge.store import Workspace


@pytest.fixture(scope="session")
def catalog() -> AspectCatalog:
    return load_catalog()


@pytest.fixture()
def mock() -> MockProvider:
    return MockProvider(seed=0)


@pytest.fixture()
def ws(tmp_path) -> Workspace:
    return Workspace(tmp_path)


@pytest.fixture()
def record(catalog) -> CharacterRecord:
    provider = MockProvider(seed=11)
    return forge_character(sample_spec(catalog, "fixture-main"), provider, catalog)


@pytest.fixture()
def partner(catalog) -> CharacterRecord:
    provider = MockProvider(seed=12)
    return forge_character(sample_spec(catalog, "fixture-partner"), provider, catalog)
