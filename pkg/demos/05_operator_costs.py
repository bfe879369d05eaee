"""
Hardware operator budgets of the three approaches
=================================================

What does each map strategy cost in datapath operators and map memory?
The on-the-fly pipeline is walked symbolically, so its counts respond to
the configuration (a rotation brings the 3x3 matrix products and the
homogeneous divisions with it); the sampled-LUT interpolator is a fixed
pair of bilinear modules regardless of the lens.
"""

from dataclasses import replace

import numpy as np

from lensmap import (
    CameraIntrinsics,
    DistortionCoefficients,
    LensConfig,
    RotationMatrix,
    build_reference_map,
    estimate_full_lut,
    estimate_onthefly,
    estimate_sampling,
    subsample,
)

cam = CameraIntrinsics(fx=500.0, fy=500.0, cx=319.5, cy=239.5)
base = LensConfig(
    640, 480, cam, cam,
    coeffs=DistortionCoefficients(k1=-0.05, k2=0.01, p1=0.001, p2=-0.001),
)

theta = np.radians(1.5)
rectifying = RotationMatrix(np.array([
    [np.cos(theta), 0.0, np.sin(theta)],
    [0.0, 1.0, 0.0],
    [-np.sin(theta), 0.0, np.cos(theta)],
]))

smap = subsample(build_reference_map(base), 5)

rows = [
    ("onthefly, no rotation", estimate_onthefly(base)),
    ("onthefly, rectifying R", estimate_onthefly(replace(base, rotation=rectifying))),
    ("sampled LUT (any n)", estimate_sampling(smap.grid_w, smap.grid_h,
                                              smap.sample_fmt.total_bits)),
    ("full-resolution LUT", estimate_full_lut(640, 480, 32)),
]

print(f"{'approach':<24} {'mul':>4} {'add':>4} {'div':>4} {'map memory':>14}")
print("-" * 56)
for name, est in rows:
    if est.memory_bits >= 1_000_000:
        memory = f"{est.memory_bits / 8e6:.2f} MB"
    elif est.memory_bits:
        memory = f"{est.memory_bits / 8e3:.2f} kB"
    else:
        memory = "none"
    print(f"{name:<24} {est.multipliers:>4} {est.adders:>4} {est.dividers:>4} {memory:>14}")

print()
print("Adders include one rounding stage per multiplier/divider output;")
print("shifts and the relative-to-absolute address add are free.")
