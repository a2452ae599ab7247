import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpesim.lindblad import DecayRates
from dpesim.qd_model import LevelScheme


@pytest.fixture(scope="session")
def scheme():
    return LevelScheme()


@pytest.fixture(scope="session")
def rates():
    return DecayRates()


@pytest.fixture(scope="session")
def tpe_pi_amplitude(scheme, rates):
    from dpesim.experiments import calibrate_tpe_pi

    return calibrate_tpe_pi(scheme, rates)
