import pytest

from lensmap import (
    DistortionCoefficients,
    LensConfig,
    ResourceEstimate,
    estimate_full_lut,
    estimate_onthefly,
    estimate_sampling,
)
from lensmap.resources import BILINEAR_ADDERS, BILINEAR_MULTIPLIERS, SAMPLING_GLUE_ADDERS
from conftest import BASE_INTRINSICS, make_base_config, rotation_about_y


class TestSamplingEstimate:
    def test_six_multipliers_no_dividers(self):
        est = estimate_sampling(21, 16, 21)
        assert est.multipliers == 6
        assert est.dividers == 0

    def test_one_bilinear_module_is_three_multipliers(self):
        assert BILINEAR_MULTIPLIERS == 3

    def test_counts_constant_across_parameters(self):
        a = estimate_sampling(21, 16, 21)
        b = estimate_sampling(81, 61, 32)
        assert (a.multipliers, a.adders, a.dividers) == (b.multipliers, b.adders, b.dividers)
        assert a.memory_bits != b.memory_bits

    def test_adder_constant_documented_composition(self):
        est = estimate_sampling(21, 16, 21)
        assert est.adders == 2 * BILINEAR_ADDERS + SAMPLING_GLUE_ADDERS

    def test_memory_is_two_planes(self):
        assert estimate_sampling(21, 16, 21).memory_bits == 21 * 16 * 2 * 21

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            estimate_sampling(1, 16, 21)


class TestOnTheFlyEstimate:
    def test_no_division_without_rotation_or_rational(self, base_config):
        assert estimate_onthefly(base_config).dividers == 0

    def test_base_fixture_frozen_counts(self, base_config):
        # Hand tally of the direct-relative DAG (identity rotation, equal
        # intrinsics, no rational denominator):
        #   multipliers: 2 normalize + 3 squares/cross + 3 Horner
        #                + 3 per-axis correction terms x2 + 2 projection = 16
        #   adders: 2 normalize subs + 1 r2 + 2 Horner + 3 per-axis x2 = 11
        #           + 16 rounding adders (one per multiplier) = 27
        est = estimate_onthefly(base_config)
        assert (est.multipliers, est.adders, est.dividers) == (16, 27, 0)
        assert est.memory_bits == 0

    def test_rotation_adds_matrix_products_and_divisions(self, base_config):
        from dataclasses import replace

        rotated = replace(base_config, rotation=rotation_about_y(0.02))
        base = estimate_onthefly(base_config)
        rot = estimate_onthefly(rotated)
        assert rot.dividers >= 1
        assert rot.multipliers == base.multipliers + 9  # the 3x3 matrix products
        assert rot.multipliers > base.multipliers
        assert rot.adders > base.adders
        assert rot.dividers > base.dividers

    def test_rational_coefficients_add_divider(self, base_config):
        from dataclasses import replace

        rational = replace(
            base_config,
            coeffs=DistortionCoefficients(k1=-0.05, k4=0.01),
        )
        est = estimate_onthefly(rational)
        assert est.dividers == 1

    def test_strictly_above_sampling(self, base_config):
        onthefly = estimate_onthefly(base_config)
        sampling = estimate_sampling(21, 16, 21)
        assert onthefly.multipliers > sampling.multipliers
        assert onthefly.adders > sampling.adders


class TestFullLut:
    def test_vga_32_bit(self):
        est = estimate_full_lut(640, 480, 32)
        assert est.memory_bits == 19_660_800
        assert est.memory_bits / 8 / 1e6 == pytest.approx(2.46, rel=0.02)
        assert (est.multipliers, est.adders, est.dividers) == (0, 0, 0)

    def test_tiny_image(self):
        assert estimate_full_lut(2, 2, 8).memory_bits == 64

    def test_720p(self):
        assert estimate_full_lut(1280, 720, 32).memory_bits == 58_982_400

    def test_validation(self):
        with pytest.raises(ValueError):
            estimate_full_lut(0, 480, 32)


class TestResourceEstimateType:
    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ResourceEstimate(-1, 0, 0, 0)


def test_direct_relative_only_without_rotation_and_with_matching_intrinsics():
    # different output intrinsics force the general projection tail: per
    # axis one extra add (x + dx), one constant add (cx) and one subtract
    # (relative output), with the same multiplier count
    from lensmap import CameraIntrinsics

    base = make_base_config()
    other = CameraIntrinsics(fx=450.0, fy=450.0, cx=320.0, cy=240.0)
    general = LensConfig(640, 480, BASE_INTRINSICS, other, coeffs=base.coeffs)
    simplified = estimate_onthefly(base)
    full = estimate_onthefly(general)
    assert full.multipliers == simplified.multipliers
    assert full.adders == simplified.adders + 6
    assert full.dividers == 0
