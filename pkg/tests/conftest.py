import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lidarpcc.ingest import CaptureStream, parse_velodyne_pcap
from lidarpcc.projection import GridLayout
from lidarpcc.synth import SynthConfig, write_synthetic_capture

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SYNTH_FRAMES = 20


@pytest.fixture(scope="session")
def synth_capture(tmp_path_factory):
    path = tmp_path_factory.mktemp("synth") / "street.pcap"
    write_synthetic_capture(path, SynthConfig(frames=SYNTH_FRAMES))
    return path


@pytest.fixture(scope="session")
def synth_frames(synth_capture):
    frames = parse_velodyne_pcap(CaptureStream(synth_capture))
    assert len(frames) == SYNTH_FRAMES
    return frames


@pytest.fixture(scope="session")
def vlp_grid():
    return GridLayout.from_sensor()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
