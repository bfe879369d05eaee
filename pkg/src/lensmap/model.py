"""Floating-point camera/distortion model and the full-resolution reference map.

The mapping runs output pixel -> input pixel: normalize with the output
camera, rotate the ray back into the original camera frame, apply radial and
tangential distortion, and project with the original camera intrinsics. The
dense 64-bit map produced by :func:`build_reference_map` is the ground truth
every hardware-style approximation in this package is measured against.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

__all__ = [
    "CameraIntrinsics",
    "DistortionCoefficients",
    "RotationMatrix",
    "LensConfig",
    "RemapField",
    "DisplacementBounds",
    "ConfigError",
    "MappingError",
    "normalize_pixel",
    "apply_inverse_rotation",
    "distort",
    "project",
    "build_reference_map",
    "scale_distortion",
    "displacement_bounds",
    "load_config",
    "read_fmap",
    "write_fmap",
]

_W_EPS = 1e-12
_DEN_EPS = 1e-12
_ORTHO_TOL = 1e-9

FMAP_MAGIC = b"FMAP"
FMAP_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration value or malformed configuration document."""


class MappingError(ValueError):
    """The mapping function is degenerate for some output pixel.

    ``index`` holds the flat index of the first offending element when the
    error was detected on an array evaluation, else None.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"intrinsics.{name} must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths fx, fy must be positive")


@dataclass(frozen=True)
class DistortionCoefficients:
    """Radial (k1..k3), tangential (p1, p2) and rational-denominator (k4..k6)
    distortion coefficients. Defaults are all zero (no distortion)."""

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k4: float = 0.0
    k5: float = 0.0
    k6: float = 0.0

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "p1", "p2", "k4", "k5", "k6"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"coeffs.{name} must be finite")

    @property
    def is_rational(self) -> bool:
        return self.k4 != 0.0 or self.k5 != 0.0 or self.k6 != 0.0


@dataclass(frozen=True, eq=False)
class RotationMatrix:
    """3x3 rotation applied virtually to the output camera frame."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64)
        if r.shape != (3, 3):
            raise ConfigError("rotation must be a 3x3 matrix")
        if np.max(np.abs(r.T @ r - np.eye(3))) > _ORTHO_TOL:
            raise ConfigError("rotation matrix is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ConfigError("rotation matrix determinant must be +1")
        r.flags.writeable = False
        object.__setattr__(self, "r", r)

    @classmethod
    def identity(cls) -> "RotationMatrix":
        return cls(np.eye(3))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.r, np.eye(3)))


@dataclass(frozen=True)
class LensConfig:
    """One correction problem: image size, original and output camera
    intrinsics, distortion coefficients and virtual rotation."""

    image_width: int
    image_height: int
    intrinsics: CameraIntrinsics
    new_intrinsics: CameraIntrinsics
    coeffs: DistortionCoefficients = field(default_factory=DistortionCoefficients)
    rotation: RotationMatrix = field(default_factory=RotationMatrix.identity)

    def __post_init__(self):
        if self.image_width < 2 or self.image_height < 2:
            raise ConfigError("image dimensions must be at least 2x2")

    def with_factor(self, factor: float) -> "LensConfig":
        """Config with the primary coefficients scaled by ``factor``."""
        return replace(self, coeffs=scale_distortion(self.coeffs, factor))


@dataclass(frozen=True, eq=False)
class RemapField:
    """Dense per-pixel map: ``map_x``/``map_y`` hold absolute source
    coordinates for each output pixel, as 64-bit floats."""

    width: int
    height: int
    map_x: np.ndarray
    map_y: np.ndarray

    def __post_init__(self):
        for name in ("map_x", "map_y"):
            plane = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if plane.shape != (self.height, self.width):
                raise ValueError(f"{name} must have shape (height, width)")
            if not np.all(np.isfinite(plane)):
                raise ValueError(f"{name} contains non-finite values")
            plane.flags.writeable = False
            object.__setattr__(self, name, plane)

    def rel_x(self) -> np.ndarray:
        """Relative horizontal displacement map_x(u,v) - u."""
        return self.map_x - np.arange(self.width, dtype=np.float64)

    def rel_y(self) -> np.ndarray:
        """Relative vertical displacement map_y(u,v) - v."""
        return self.map_y - np.arange(self.height, dtype=np.float64)[:, None]


class DisplacementBounds(NamedTuple):
    min_dx: float
    max_dx: float
    min_dy: float
    max_dy: float


def normalize_pixel(u, v, cam: CameraIntrinsics):
    """Pixel coordinates to normalized camera coordinates.

    Accepts scalars or numpy arrays.
    """
    return (u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy


def apply_inverse_rotation(x, y, rotation: RotationMatrix):
    """Rotate the ray (x, y, 1) by R^T and de-homogenize.

    Raises MappingError if a point lands at (or numerically near) infinity,
    which signals a rotation incompatible with this field of view.
    """
    r = rotation.r
    # Rows of R^T are the columns of R.
    bx = r[0, 0] * x + r[1, 0] * y + r[2, 0]
    by = r[0, 1] * x + r[1, 1] * y + r[2, 1]
    bw = r[0, 2] * x + r[1, 2] * y + r[2, 2]
    small = np.abs(bw) < _W_EPS
    if np.any(small):
        index = int(np.argmax(small)) if np.ndim(small) else None
        raise MappingError("rotation sends a ray to infinity", index=index)
    return bx / bw, by / bw


def distort(x, y, coeffs: DistortionCoefficients):
    """Apply radial + tangential distortion to normalized coordinates."""
    c = coeffs
    r2 = x * x + y * y
    num = 1.0 + r2 * (c.k1 + r2 * (c.k2 + r2 * c.k3))
    den = 1.0 + r2 * (c.k4 + r2 * (c.k5 + r2 * c.k6))
    bad = den <= _DEN_EPS
    if np.any(bad):
        index = int(np.argmax(bad)) if np.ndim(bad) else None
        raise MappingError("rational distortion denominator is degenerate", index=index)
    radial = num / den
    xy = x * y
    xd = x * radial + 2.0 * c.p1 * xy + c.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * xy
    return xd, yd


def project(x, y, cam: CameraIntrinsics):
    """Normalized camera coordinates to pixel coordinates."""
    return cam.fx * x + cam.cx, cam.fy * y + cam.cy


def _relative_map(u, v, cfg: LensConfig):
    """Displacements (map - pixel) for output pixels ``u``, ``v``.

    The projection is folded into relative form: rel = fx * (x_dist - x_id)
    with x_id the normalization of (u, v) under the original camera. This is
    algebraically identical to project(distort(...)) - u but cancels exactly,
    so configurations with no effective correction produce displacements that
    are exactly zero rather than round-trip noise.
    """
    x, y = normalize_pixel(u, v, cfg.new_intrinsics)
    x, y = apply_inverse_rotation(x, y, cfg.rotation)
    xd, yd = distort(x, y, cfg.coeffs)
    x_id, y_id = normalize_pixel(u, v, cfg.intrinsics)
    return cfg.intrinsics.fx * (xd - x_id), cfg.intrinsics.fy * (yd - y_id)


def build_reference_map(cfg: LensConfig) -> RemapField:
    """Evaluate the full correction chain at every output pixel.

    All arithmetic is 64-bit floating point; the result is the reference
    oracle for the fixed-point and subsampled approximations.
    """
    uu, vv = np.meshgrid(
        np.arange(cfg.image_width, dtype=np.float64),
        np.arange(cfg.image_height, dtype=np.float64),
    )
    try:
        rel_x, rel_y = _relative_map(uu, vv, cfg)
    except MappingError as exc:
        if exc.index is not None:
            v, u = np.unravel_index(exc.index, uu.shape)
            raise MappingError(f"{exc} at pixel (u={u}, v={v})") from exc
        raise
    return RemapField(cfg.image_width, cfg.image_height, uu + rel_x, vv + rel_y)


def scale_distortion(coeffs: DistortionCoefficients, factor: float) -> DistortionCoefficients:
    """Scale the primary coefficients k1..k3, p1, p2 by ``factor``.

    k4..k6 are left untouched. This defines the "distortion factor" severity
    sweep used throughout the evaluation.
    """
    if factor < 0:
        raise ValueError("distortion factor must be non-negative")
    return replace(
        coeffs,
        k1=coeffs.k1 * factor,
        k2=coeffs.k2 * factor,
        k3=coeffs.k3 * factor,
        p1=coeffs.p1 * factor,
        p2=coeffs.p2 * factor,
    )


def displacement_bounds(field: RemapField) -> DisplacementBounds:
    """Extrema of the relative displacements over all pixels."""
    rel_x = field.rel_x()
    rel_y = field.rel_y()
    return DisplacementBounds(
        float(rel_x.min()), float(rel_x.max()), float(rel_y.min()), float(rel_y.max())
    )


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _intrinsics_from(obj, where: str) -> CameraIntrinsics:
    _require(isinstance(obj, dict), f"{where} must be an object")
    for key in ("fx", "fy", "cx", "cy"):
        _require(key in obj, f"{where}.{key} is missing")
        _require(isinstance(obj[key], (int, float)), f"{where}.{key} must be a number")
    return CameraIntrinsics(float(obj["fx"]), float(obj["fy"]), float(obj["cx"]), float(obj["cy"]))


def config_from_dict(doc: dict) -> LensConfig:
    """Build a LensConfig from a parsed JSON document.

    Missing distortion coefficients default to 0, a missing rotation to the
    identity, and missing new_intrinsics to the original intrinsics.
    """
    _require(isinstance(doc, dict), "config root must be an object")
    for key in ("image_width", "image_height", "intrinsics"):
        _require(key in doc, f"{key} is missing")
    _require(isinstance(doc["image_width"], int), "image_width must be an integer")
    _require(isinstance(doc["image_height"], int), "image_height must be an integer")

    intrinsics = _intrinsics_from(doc["intrinsics"], "intrinsics")
    if "new_intrinsics" in doc:
        new_intrinsics = _intrinsics_from(doc["new_intrinsics"], "new_intrinsics")
    else:
        new_intrinsics = intrinsics

    coeffs_doc = doc.get("coeffs", {})
    _require(isinstance(coeffs_doc, dict), "coeffs must be an object")
    known = {"k1", "k2", "k3", "p1", "p2", "k4", "k5", "k6"}
    for key in coeffs_doc:
        _require(key in known, f"coeffs.{key} is not a known coefficient")
        _require(isinstance(coeffs_doc[key], (int, float)), f"coeffs.{key} must be a number")
    coeffs = DistortionCoefficients(**{k: float(v) for k, v in coeffs_doc.items()})

    if "rotation" in doc:
        rot = doc["rotation"]
        _require(
            isinstance(rot, list) and len(rot) == 9,
            "rotation must be a list of 9 numbers (row-major)",
        )
        rotation = RotationMatrix(np.array(rot, dtype=np.float64).reshape(3, 3))
    else:
        rotation = RotationMatrix.identity()

    return LensConfig(
        image_width=doc["image_width"],
        image_height=doc["image_height"],
        intrinsics=intrinsics,
        new_intrinsics=new_intrinsics,
        coeffs=coeffs,
        rotation=rotation,
    )


def load_config(path) -> LensConfig:
    """Read a LensConfig from a JSON file, with positional diagnostics."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# Float map container: 16-byte header (magic, version, width, height), then
# the map_x plane and the map_y plane as row-major little-endian float64.

def write_fmap(field: RemapField, path):
    header = struct.pack("<4sBxxxII", FMAP_MAGIC, FMAP_VERSION, field.width, field.height)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(field.map_x.astype("<f8").tobytes())
        fh.write(field.map_y.astype("<f8").tobytes())


def read_fmap(path) -> RemapField:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise ValueError(f"{path}: truncated FMAP header")
        magic, version, width, height = struct.unpack("<4sBxxxII", header)
        if magic != FMAP_MAGIC:
            raise ValueError(f"{path}: not an FMAP file")
        if version != FMAP_VERSION:
            raise ValueError(f"{path}: unsupported FMAP version {version}")
        count = width * height
        raw = fh.read(2 * count * 8)
        if len(raw) != 2 * count * 8:
            raise ValueError(f"{path}: truncated FMAP payload")
    planes = np.frombuffer(raw, dtype="<f8")
    map_x = planes[:count].reshape(height, width)
    map_y = planes[count:].reshape(height, width)
    return RemapField(width, height, map_x, map_y)
