import math

import numpy as np
import pytest

from lensmap import (
    CameraIntrinsics,
    DistortionCoefficients,
    LensConfig,
    RotationMatrix,
)

# Base calibration used throughout the suite: VGA frame, mild barrel lens
# with a touch of tangential distortion, identity rotation, output camera
# equal to the original one.
BASE_INTRINSICS = CameraIntrinsics(fx=500.0, fy=500.0, cx=319.5, cy=239.5)
BASE_COEFFS = DistortionCoefficients(k1=-0.05, k2=0.01, k3=0.0, p1=0.001, p2=-0.001)


def make_base_config(width: int = 640, height: int = 480, factor: float = 1.0) -> LensConfig:
    cfg = LensConfig(
        image_width=width,
        image_height=height,
        intrinsics=BASE_INTRINSICS,
        new_intrinsics=BASE_INTRINSICS,
        coeffs=BASE_COEFFS,
    )
    return cfg.with_factor(factor)


def identity_config(width: int = 640, height: int = 480) -> LensConfig:
    return LensConfig(
        image_width=width,
        image_height=height,
        intrinsics=BASE_INTRINSICS,
        new_intrinsics=BASE_INTRINSICS,
    )


def rotation_about_y(angle_rad: float) -> RotationMatrix:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return RotationMatrix(np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]))


def rotation_about_z(angle_rad: float) -> RotationMatrix:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return RotationMatrix(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))


def make_centered_config(width: int, height: int, factor: float = 1.0) -> LensConfig:
    """Same lens character centered on a small frame: corner rays reach the
    same normalized radius as the VGA fixture."""
    cam = CameraIntrinsics(
        fx=width * 500.0 / 640.0,
        fy=height * 500.0 / 480.0,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
    )
    cfg = LensConfig(width, height, cam, cam, coeffs=BASE_COEFFS)
    return cfg.with_factor(factor)


@pytest.fixture
def base_config() -> LensConfig:
    return make_base_config()


@pytest.fixture
def small_base_config() -> LensConfig:
    # Same lens on a small frame, for tests that loop per pixel.
    return make_base_config(64, 48)
