import numpy as np
import pytest

from ppslam.harness import paper_config, simulate
from ppslam.lie import Pose, so3_exp


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pose(rng, scale=3.0):
    return Pose(so3_exp(rng.normal(size=3) * 1.5), rng.normal(size=3) * scale)


def random_unit_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


@pytest.fixture(scope="session")
def noise_free_run():
    """Full 40 s reference run without velocity noise (shared across modules)."""
    return simulate(paper_config(noise=False))


@pytest.fixture(scope="session")
def noisy_run():
    return simulate(paper_config(noise=True))


ACCEPTANCE_LINES = {}


def record_criterion(number: int, ok: bool, text: str) -> str:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
