"""Subsampled map LUT: coarse grid of fixed-point samples plus bilinear
reconstruction of per-pixel map values.

Samples are taken every 2^n pixels from the relative-displacement planes of a
reference map and quantized to a small fixed-point format (8 fractional bits
by default). Edge rows/columns of the grid are clamped to the last pixel so
the grid always covers the frame without extrapolation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .fixedpoint import QFormat, quantize_array
from .model import RemapField

__all__ = [
    "SubsampledMap",
    "subsample",
    "reconstruct",
    "sampled_field",
    "memory_footprint",
    "read_smap",
    "write_smap",
]

SMAP_MAGIC = b"SMAP"
SMAP_VERSION = 1

DEFAULT_SAMPLE_FRAC_BITS = 8
DEFAULT_SAMPLE_INT_BITS = 13  # 12 magnitude bits + sign


def grid_shape(image_width: int, image_height: int, n: int) -> tuple[int, int]:
    """Sample-grid dimensions for a 2^n-pixel pitch."""
    pitch = 1 << n
    grid_w = -(-(image_width - 1) // pitch) + 1
    grid_h = -(-(image_height - 1) // pitch) + 1
    return grid_w, grid_h


@dataclass(frozen=True, eq=False)
class SubsampledMap:
    """Grid of quantized relative displacements at 2^n-pixel pitch."""

    n: int
    image_width: int
    image_height: int
    sample_fmt: QFormat
    samples_x: np.ndarray  # raw integers, shape (grid_h, grid_w)
    samples_y: np.ndarray

    def __post_init__(self):
        grid_w, grid_h = grid_shape(self.image_width, self.image_height, self.n)
        for name in ("samples_x", "samples_y"):
            grid = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            if grid.shape != (grid_h, grid_w):
                raise ValueError(f"{name} must have shape (grid_h, grid_w)")
            grid.flags.writeable = False
            object.__setattr__(self, name, grid)

    @property
    def grid_w(self) -> int:
        return self.samples_x.shape[1]

    @property
    def grid_h(self) -> int:
        return self.samples_x.shape[0]

    @property
    def sample_frac_bits(self) -> int:
        return self.sample_fmt.frac_bits


def subsample(
    field: RemapField,
    n: int,
    sample_frac_bits: int = DEFAULT_SAMPLE_FRAC_BITS,
    sample_int_bits: int = DEFAULT_SAMPLE_INT_BITS,
) -> SubsampledMap:
    """Pick one relative-displacement value every 2^n pixels on both axes.

    Grid point (i, j) stores the quantized displacement at pixel
    (min(i*2^n, W-1), min(j*2^n, H-1)).
    """
    if n < 1:
        raise ValueError("sampling factor n must be >= 1")
    pitch = 1 << n
    if pitch >= min(field.width, field.height):
        raise ValueError("2^n must be smaller than the smallest image dimension")
    grid_w, grid_h = grid_shape(field.width, field.height, n)
    if grid_w < 2 or grid_h < 2:
        raise ValueError("sample grid is too small for bilinear reconstruction")

    xs = np.minimum(np.arange(grid_w, dtype=np.int64) * pitch, field.width - 1)
    ys = np.minimum(np.arange(grid_h, dtype=np.int64) * pitch, field.height - 1)
    rel_x = field.rel_x()[np.ix_(ys, xs)]
    rel_y = field.rel_y()[np.ix_(ys, xs)]

    fmt = QFormat(sample_frac_bits, sample_int_bits)
    raw_x, _ = quantize_array(rel_x, fmt)
    raw_y, _ = quantize_array(rel_y, fmt)
    return SubsampledMap(n, field.width, field.height, fmt, raw_x, raw_y)


def reconstruct(s: SubsampledMap, u, v):
    """Bilinear blend of the four surrounding samples at pixel (u, v).

    Accepts scalars or arrays; returns real-valued relative displacements.
    Coordinates outside the image violate the contract and raise.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any(u < 0) or np.any(u >= s.image_width) or np.any(v < 0) or np.any(v >= s.image_height):
        raise ValueError("reconstruct coordinates outside the image")

    pitch = float(1 << s.n)
    gu = u / pitch
    gv = v / pitch
    i = np.floor(gu).astype(np.int64)
    j = np.floor(gv).astype(np.int64)
    a = gu - i
    b = gv - j
    i1 = np.minimum(i + 1, s.grid_w - 1)
    j1 = np.minimum(j + 1, s.grid_h - 1)

    scale = s.sample_fmt.resolution
    out = []
    for grid in (s.samples_x, s.samples_y):
        g = grid.astype(np.float64) * scale
        blend = (
            (1.0 - a) * (1.0 - b) * g[j, i]
            + a * (1.0 - b) * g[j, i1]
            + (1.0 - a) * b * g[j1, i]
            + a * b * g[j1, i1]
        )
        out.append(blend if blend.ndim else float(blend))
    return out[0], out[1]


def sampled_field(s: SubsampledMap) -> RemapField:
    """Reconstruct the full-resolution map from the sample grid."""
    uu, vv = np.meshgrid(
        np.arange(s.image_width, dtype=np.float64),
        np.arange(s.image_height, dtype=np.float64),
    )
    rel_x, rel_y = reconstruct(s, uu, vv)
    return RemapField(s.image_width, s.image_height, uu + rel_x, vv + rel_y)


def memory_footprint(s: SubsampledMap, bits_per_sample: int | None = None) -> int:
    """Storage in bits for both sample planes at the given per-value width."""
    if bits_per_sample is None:
        bits_per_sample = s.sample_fmt.total_bits
    if bits_per_sample < 1:
        raise ValueError("bits_per_sample must be positive")
    return s.grid_w * s.grid_h * 2 * bits_per_sample


# Binary container: 16-byte header, then samples_x, then samples_y, row-major,
# each value little-endian two's-complement in ceil(bits_per_sample / 8) bytes.
_HEADER = struct.Struct("<4sBBHHBBHH")  # magic, version, n, gw, gh, frac, bits, img_w, img_h


def write_smap(s: SubsampledMap, path):
    bits = s.sample_fmt.total_bits
    nbytes = (bits + 7) // 8
    header = _HEADER.pack(
        SMAP_MAGIC, SMAP_VERSION, s.n, s.grid_w, s.grid_h,
        s.sample_frac_bits, bits, s.image_width, s.image_height,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for grid in (s.samples_x, s.samples_y):
            for value in grid.ravel():
                fh.write(int(value).to_bytes(nbytes, "little", signed=True))


def read_smap(path) -> SubsampledMap:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated SMAP header")
        magic, version, n, grid_w, grid_h, frac_bits, bits, img_w, img_h = _HEADER.unpack(header)
        if magic != SMAP_MAGIC:
            raise ValueError(f"{path}: not an SMAP file")
        if version != SMAP_VERSION:
            raise ValueError(f"{path}: unsupported SMAP version {version}")
        nbytes = (bits + 7) // 8
        count = grid_w * grid_h
        payload = fh.read(2 * count * nbytes)
        if len(payload) != 2 * count * nbytes:
            raise ValueError(f"{path}: truncated SMAP payload")
    values = [
        int.from_bytes(payload[k * nbytes : (k + 1) * nbytes], "little", signed=True)
        for k in range(2 * count)
    ]
    raw = np.array(values, dtype=np.int64)
    fmt = QFormat(frac_bits, bits - frac_bits)
    return SubsampledMap(
        n, img_w, img_h, fmt,
        raw[:count].reshape(grid_h, grid_w),
        raw[count:].reshape(grid_h, grid_w),
    )
