import pytest

from apetrack.stochastics import RngStream
from apetrack.tracking_models import CoordinatedTurnModel, CtConfig, SensorPose


@pytest.fixture
def ct_model():
    return CoordinatedTurnModel(CtConfig(dt=1.0), SensorPose(0.0, 0.0))


@pytest.fixture
def rng():
    return RngStream(7)
