import pytest

from frameoma.data import TimeSeriesSet
from frameoma.frame_model import (
    ExcitationSpec,
    add_measurement_noise,
    assemble,
    portal_frame,
    simulate_response,
    solve_modes,
)
from frameoma.spectral import welch_cpsd

import acceptance_log

FRAME_SEED = 0


@pytest.fixture(scope="session")
def frame_model():
    return portal_frame()


@pytest.fixture(scope="session")
def frame_sys(frame_model):
    return assemble(frame_model)


@pytest.fixture(scope="session")
def frame_raw(frame_sys):
    """Noise-free default-frame record, all free DOFs (512 s at 1024 Hz)."""
    return simulate_response(frame_sys, ExcitationSpec(seed=FRAME_SEED))


@pytest.fixture(scope="session")
def frame_record(frame_raw) -> TimeSeriesSet:
    """Translational channels with 10 % sensor noise, as the CLI produces."""
    ts = frame_raw.select(directions=("x", "y"))
    return add_measurement_noise(ts, 0.1, seed=FRAME_SEED + 1)


@pytest.fixture(scope="session")
def frame_spec(frame_record):
    return welch_cpsd(frame_record)


@pytest.fixture(scope="session")
def frame_truth(frame_sys, frame_record):
    return solve_modes(frame_sys, 5).restrict(frame_record.channels)


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_log.summary()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
