from pathlib import Path

import pytest

from uolatency import DeploymentSpec, LatencyParams, build_topology

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture
def defaults():
    return LatencyParams()


@pytest.fixture
def uo_topology():
    return build_topology(DeploymentSpec.uo())


@pytest.fixture
def mno_topology():
    def make(distance, n_factories=10):
        return build_topology(DeploymentSpec.mno(distance, n_factories))
    return make
