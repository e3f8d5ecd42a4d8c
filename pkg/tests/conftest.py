import math

import numpy as np
import pytest

from focrlb.fo_signal import FoParams
from focrlb.noise_model import build_surrogate, default_modal_spec

FS = 5.0
PAPER_N = 100
PAPER_AMP = 0.01
PAPER_PHASE = math.pi / 6
PAPER_F0_HZ = 0.3
SURROGATE_SIGMA_W2 = 1e-4


@pytest.fixture(scope="session")
def surrogate():
    return build_surrogate(default_modal_spec(), SURROGATE_SIGMA_W2, FS)


@pytest.fixture
def paper_fo():
    return FoParams.from_hz(PAPER_AMP, PAPER_F0_HZ, PAPER_PHASE, FS)


@pytest.fixture
def rng():
    return np.random.default_rng(20260415)


ACCEPTANCE_LINES = []


def pytest_runtest_makereport(item, call):
    criterion = item.get_closest_marker("criterion")
    if criterion is None or call.when != "call":
        return
    label = criterion.args[0]
    if hasattr(item, "callspec"):
        label += f" [{item.callspec.id}]"
    status = "PASS" if call.excinfo is None else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {label}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
