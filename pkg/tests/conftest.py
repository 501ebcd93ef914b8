import numpy as np
import pytest

from eventcmax.events import PIXEL_CENTERED, CameraModel, from_arrays, normalize_time, to_frame
from eventcmax.synth import SceneSpec, generate
from eventcmax.warps import Translation2DOF, Zoom1DOF


def make_slice(t, x, y, p=None, camera=None, frame=None):
    """Normalized slice from raw pixel arrays, optionally moved to ``frame``."""
    camera = camera or CameraModel(64, 48)
    p = np.ones(len(t)) if p is None else p
    s = normalize_time(from_arrays(t, x, y, p, camera))
    return to_frame(s, frame) if frame else s


@pytest.fixture(scope="session")
def camera():
    return CameraModel(96, 72, 80.0, 80.0)


@pytest.fixture(scope="session")
def zoom_stream(camera):
    s, flow = generate(SceneSpec(n_points=40, n_events=6000, seed=3), Zoom1DOF(0.2), camera)
    return to_frame(normalize_time(s), PIXEL_CENTERED), flow


@pytest.fixture(scope="session")
def trans_stream(camera):
    s, flow = generate(SceneSpec(n_points=40, n_events=6000, seed=4), Translation2DOF(6.0, -3.0), camera)
    return normalize_time(s), flow


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split("-")[1])):
        terminalreporter.write_line(ACCEPTANCE[key])
