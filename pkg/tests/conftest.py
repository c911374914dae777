import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from bipednav.pendulum import PendulumParams


@pytest.fixture(scope="session")
def params():
    return PendulumParams(g=9.81, h_apex=1.0)


@pytest.fixture(scope="session")
def omega(params):
    return params.omega
