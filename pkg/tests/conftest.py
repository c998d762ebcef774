import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conduitwave.potential import WaveParams
from conduitwave.quadrature import reconstruct_profile
from conduitwave.reparam import profile_partials


BASE = WaveParams(a=-1.0, E=0.01, c=1.0)


@pytest.fixture(scope="session")
def base_params():
    return BASE


@pytest.fixture(scope="session")
def base_profile():
    return reconstruct_profile(BASE, n=256)


@pytest.fixture(scope="session")
def base_partials():
    return profile_partials(BASE, n=256)
