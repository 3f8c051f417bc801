from pathlib import Path

import numpy as np
import pytest

from depthkit.geometry import CameraIntrinsics

ROOT = Path(__file__).resolve().parents[1]
SCENES = ROOT / "scenes"

# recorded rig: focal length in pixels and stereo baseline in meters
FOCAL = 945.391406
BASELINE = 0.5764

_acceptance_lines: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def rig():
    return CameraIntrinsics(focal=FOCAL, height=860, width=1656, baseline=BASELINE, cx=828.0, cy=430.0)


@pytest.fixture
def record_criterion():
    def _record(name: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
        _acceptance_lines.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
