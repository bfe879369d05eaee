"""Abstract hardware operator-count estimates for each map approach.

Operators are counted as fully pipelined per-pixel datapath instances (one
result per clock), independent of any vendor mapping to DSP slices or LUTs.

Accounting model
----------------
==========================  ===========================================
operation                   cost
==========================  ===========================================
multiply                    1 multiplier + 1 adder (rounding stage)
add / subtract              1 adder
divide                      1 divider + 1 adder (rounding stage)
double / shift by 2^k       free (wiring)
constant quantization       free (configuration time, not per pixel)
relative -> absolute add    not counted (address path, outside the map
                            module)
==========================  ===========================================

Every multiplier and divider output is rounded half away from zero before
narrowing, which in hardware is an addition of the half-LSB constant; those
adders are part of the datapath and are counted uniformly for all
approaches.

The subsampled-LUT interpolator is two bilinear modules (one per axis), each
the classic three-lerp arrangement: 3 multipliers and 6 adder/subtractors
plus 3 rounding adders. Address generation contributes the two neighbor
increments (i+1, j+1), shared by both modules; strides are powers of two and
cost nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fixedpoint import count_map_operators
from .model import LensConfig

__all__ = [
    "ResourceEstimate",
    "estimate_onthefly",
    "estimate_sampling",
    "estimate_full_lut",
    "BILINEAR_MULTIPLIERS",
    "BILINEAR_ADDERS",
    "SAMPLING_GLUE_ADDERS",
]

# One bilinear interpolation module (three lerps).
BILINEAR_MULTIPLIERS = 3
BILINEAR_ADDERS = 9  # 6 datapath adds/subs + 3 rounding adders
# Neighbor-address increments, shared between the two modules.
SAMPLING_GLUE_ADDERS = 2


@dataclass(frozen=True)
class ResourceEstimate:
    multipliers: int
    adders: int
    dividers: int
    memory_bits: int

    def __post_init__(self):
        if min(self.multipliers, self.adders, self.dividers, self.memory_bits) < 0:
            raise ValueError("resource counts must be non-negative")


def estimate_onthefly(cfg: LensConfig) -> ResourceEstimate:
    """Operator cost of computing the map from scratch for each pixel.

    The counts come from walking the exact fixed-point DAG the on-the-fly
    evaluator runs for this configuration, so an identity rotation drops the
    matrix product and homogeneous divisions, and all-zero rational
    coefficients drop the denominator polynomial and its division. No map
    storage is needed.
    """
    mul, add, div = count_map_operators(cfg)
    return ResourceEstimate(mul, add, div, 0)


def estimate_sampling(grid_w: int, grid_h: int, bits_per_sample: int) -> ResourceEstimate:
    """Operator cost of bilinear sample reconstruction plus LUT storage.

    The datapath is two bilinear modules and address glue; the counts do not
    depend on the distortion model or the sampling factor. Memory holds both
    sample planes.
    """
    if grid_w < 2 or grid_h < 2 or bits_per_sample < 1:
        raise ValueError("invalid subsampled map geometry")
    return ResourceEstimate(
        multipliers=2 * BILINEAR_MULTIPLIERS,
        adders=2 * BILINEAR_ADDERS + SAMPLING_GLUE_ADDERS,
        dividers=0,
        memory_bits=grid_w * grid_h * 2 * bits_per_sample,
    )


def estimate_full_lut(width: int, height: int, bits_per_value: int) -> ResourceEstimate:
    """Storage cost of the unsampled per-pixel LUT; no map-side computation."""
    if width < 1 or height < 1 or bits_per_value < 1:
        raise ValueError("invalid LUT geometry")
    return ResourceEstimate(0, 0, 0, width * height * 2 * bits_per_value)
