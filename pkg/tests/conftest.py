import functools

import numpy as np
import pytest

from uowc_rte.angles import optimal_scattering_angles
from uowc_rte.phase import WaterOpticalProperties, fournier_forand, sthg, tthg

PSFS = {"sthg": sthg, "tthg": tthg, "ff": fournier_forand}
HARBOR = {"harbor-I": (0.91, 1.1), "harbor-II": (1.8177, 2.2)}


@functools.lru_cache(maxsize=None)
def grid_for(name: str, K: int = 22):
    return optimal_scattering_angles(PSFS[name](), K)


def water(name: str) -> WaterOpticalProperties:
    return WaterOpticalProperties.from_bc(*HARBOR[name])


@pytest.fixture(scope="session")
def sthg_grid():
    return grid_for("sthg")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one verdict line per acceptance criterion, echoed at the end of the session
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
