import sys

import numpy as np
import pytest

from fixap.optics import compose
from fixap.presets import legitimate_slots, preset_mach_zehnder, preset_polarization
from fixap.protocol import scheme_by_name


@pytest.fixture(scope="session")
def mz():
    return compose(preset_mach_zehnder())


@pytest.fixture(scope="session")
def pol():
    return compose(preset_polarization())


@pytest.fixture(scope="session")
def h01(mz):
    return legitimate_slots(mz.domain)


@pytest.fixture(scope="session")
def mz_scheme():
    return scheme_by_name("mz-xz-bb84")


@pytest.fixture(scope="session")
def pol_scheme():
    return scheme_by_name("polarization-bb84")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
