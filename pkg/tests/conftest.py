import numpy as np
import pytest

from navperception.media_io import CameraRig


@pytest.fixture
def rig():
    # focal length and baseline of the calibrated webcam pair
    return CameraRig(focal_px=300.0, baseline_mm=40.85, principal=(160.0, 120.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
