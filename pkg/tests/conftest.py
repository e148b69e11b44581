import pytest

from tracksentry.geometry import CameraIntrinsics, ObjectModel

from testutil import CUBE_VERTS


@pytest.fixture
def cube_model():
    return ObjectModel(points=CUBE_VERTS, id="cube")


@pytest.fixture
def small_cube_model():
    # 0.1 m cube centered at origin, diameter 0.1*sqrt(3)
    return ObjectModel(points=(CUBE_VERTS - 0.5) * 0.1, id="smallcube")


@pytest.fixture
def intr640():
    return CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0,
                            width=640, height=480)
