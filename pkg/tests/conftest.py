import random

import pytest

from privdist import generate_session_keys, load_standard_group


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture(scope="session")
def g23():
    return load_standard_group("test-23")


@pytest.fixture(scope="session")
def g256():
    return load_standard_group("test-256")


@pytest.fixture(scope="session")
def g2048():
    return load_standard_group("modp-2048")


@pytest.fixture(scope="session")
def keys256(g256):
    return generate_session_keys(g256, random.Random(7))


@pytest.fixture(scope="session")
def keys2048(g2048):
    return generate_session_keys(g2048, random.Random(8))
