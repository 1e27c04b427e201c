import pytest

from cavityflow import Params, build_gamma, density_from_adiabatic
from cavityflow.trajectory import GammaOptions

PRESET_NAMES = ["case1", "case2", "case3", "case4", "case5", "case6"]


@pytest.fixture(scope="session")
def case1():
    return Params.from_preset("case1")


@pytest.fixture(scope="session")
def case1_gamma(case1):
    # eps = 1e-7 resolves the interface fit window used by the
    # reconstruction checks
    return build_gamma(case1, GammaOptions(eps=1e-7))


@pytest.fixture(scope="session")
def case1_density(case1, case1_gamma):
    return density_from_adiabatic(case1_gamma, case1)
