"""Image remapping engine and a functional model of the streaming datapath.

`remap_image` is the offline engine: for each output pixel it fetches the
source image at the map coordinates with bilinear interpolation.
`stream_remap` simulates the hardware arrangement at row granularity: input
rows enter a circular buffer split across four parity-interleaved banks, and
output rows are produced at the same cadence after a read delay sized from
the map's vertical displacement extrema. An adequately sized buffer makes
the two paths bit-identical; an undersized one raises a buffer error naming
the first violating pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fixedpoint import QFormat, onthefly_field
from .model import DisplacementBounds, LensConfig, RemapField, displacement_bounds
from .sampling import SubsampledMap, sampled_field

__all__ = [
    "Image",
    "LineBuffer",
    "ReferenceMapProvider",
    "OnTheFlyMapProvider",
    "SampledMapProvider",
    "BufferUnderflow",
    "BufferOverwritten",
    "bank_index",
    "bilinear_fetch",
    "remap_image",
    "required_lines",
    "read_delay",
    "stream_remap",
    "read_image",
    "write_image",
]

BORDER_CONSTANT = "constant"
BORDER_CLAMP = "clamp"


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit image, 1 or 3 channels, stored as (height, width, channels)."""

    width: int
    height: int
    channels: int
    data: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if data.shape != (self.height, self.width, self.channels):
            raise ValueError("data must have shape (height, width, channels)")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Image":
        array = np.asarray(array, dtype=np.uint8)
        if array.ndim == 2:
            array = array[:, :, None]
        h, w, c = array.shape
        return cls(w, h, c, array)


class ReferenceMapProvider:
    """Serves a precomputed dense map."""

    def __init__(self, field: RemapField):
        self._field = field

    @property
    def width(self) -> int:
        return self._field.width

    @property
    def height(self) -> int:
        return self._field.height

    def remap_field(self) -> RemapField:
        return self._field


class OnTheFlyMapProvider:
    """Computes the map in fixed point from the configuration on first use."""

    def __init__(self, cfg: LensConfig, fmt: QFormat):
        self.cfg = cfg
        self.fmt = fmt
        self._field: RemapField | None = None

    @property
    def width(self) -> int:
        return self.cfg.image_width

    @property
    def height(self) -> int:
        return self.cfg.image_height

    def remap_field(self) -> RemapField:
        if self._field is None:
            self._field = onthefly_field(self.cfg, self.fmt)
        return self._field


class SampledMapProvider:
    """Reconstructs per-pixel map values from a subsampled LUT."""

    def __init__(self, smap: SubsampledMap):
        self.smap = smap
        self._field: RemapField | None = None

    @property
    def width(self) -> int:
        return self.smap.image_width

    @property
    def height(self) -> int:
        return self.smap.image_height

    def remap_field(self) -> RemapField:
        if self._field is None:
            self._field = sampled_field(self.smap)
        return self._field


class BufferUnderflow(RuntimeError):
    """A tap row is needed before it has been written into the buffer."""

    def __init__(self, u: int, v: int, needed_row: int):
        super().__init__(
            f"line buffer underflow at output pixel (u={u}, v={v}): "
            f"row {needed_row} not yet written"
        )
        self.u, self.v, self.needed_row = u, v, needed_row


class BufferOverwritten(RuntimeError):
    """A tap row was evicted from the buffer before it was consumed."""

    def __init__(self, u: int, v: int, needed_row: int):
        super().__init__(
            f"line buffer overwritten at output pixel (u={u}, v={v}): "
            f"row {needed_row} already evicted"
        )
        self.u, self.v, self.needed_row = u, v, needed_row


def bank_index(x, y):
    """Buffer memory holding pixel (x, y): row/column parity interleave."""
    return 2 * (np.asarray(y) % 2) + (np.asarray(x) % 2)


class LineBuffer:
    """Circular row store split across four parity-interleaved banks.

    Holds the most recent ``lines`` input rows; row r is evicted when row
    r + lines is written. Pixel (x, y) lives in bank 2*(y%2) + (x%2) at
    slot y % lines, so the four taps of any 2x2 quartet come from four
    distinct banks in the same step.
    """

    def __init__(self, lines: int, width: int, channels: int, read_delay: int):
        if lines < 2:
            raise ValueError("line buffer needs at least 2 rows")
        self.lines = lines
        self.width = width
        self.read_delay = read_delay
        self.banks = np.zeros((4, lines, (width + 1) // 2, channels), dtype=np.uint8)
        self.write_row = 0  # next slot, mod lines
        self.last_written = -1

    def push_row(self, row: int, data: np.ndarray):
        slot = row % self.lines
        pair = 2 * (row % 2)
        self.banks[pair, slot, : (self.width + 1) // 2] = data[0::2]
        self.banks[pair + 1, slot, : self.width // 2] = data[1::2]
        self.write_row = (row + 1) % self.lines
        self.last_written = row

    def not_yet_written(self, rows):
        return rows > self.last_written

    def evicted(self, rows):
        return rows <= self.last_written - self.lines

    def gather(self, x, y):
        """Read pixels (x, y); every row must be resident."""
        return self.banks[bank_index(x, y), y % self.lines, x >> 1]


def _blend(p00, p10, p01, p11, a, b):
    """Bilinear weighting, accumulated in float64, rounded half away from
    zero to 8 bits. Shared by the offline and streaming paths."""
    acc = (
        (1.0 - a) * (1.0 - b) * p00
        + a * (1.0 - b) * p10
        + (1.0 - a) * b * p01
        + a * b * p11
    )
    return np.floor(acc + 0.5).astype(np.uint8)


def _gather(src: Image, ix, iy, border: str, border_value: int):
    cx = np.clip(ix, 0, src.width - 1)
    cy = np.clip(iy, 0, src.height - 1)
    vals = src.data[cy, cx].astype(np.float64)
    if border == BORDER_CONSTANT:
        outside = (ix < 0) | (ix >= src.width) | (iy < 0) | (iy >= src.height)
        vals[outside] = float(border_value)
    elif border != BORDER_CLAMP:
        raise ValueError(f"unknown border policy {border!r}")
    return vals


def bilinear_fetch(src: Image, sx, sy, border: str = BORDER_CONSTANT, border_value: int = 0):
    """Sample the image at real-valued coordinates.

    Taps outside the image contribute the border value (constant 0 by
    default) or the clamped edge pixel. Returns uint8 with a trailing
    channel axis; accepts scalar or array coordinates.
    """
    sx = np.asarray(sx, dtype=np.float64)
    sy = np.asarray(sy, dtype=np.float64)
    i = np.floor(sx).astype(np.int64)
    j = np.floor(sy).astype(np.int64)
    a = (sx - i)[..., None]
    b = (sy - j)[..., None]
    p00 = _gather(src, i, j, border, border_value)
    p10 = _gather(src, i + 1, j, border, border_value)
    p01 = _gather(src, i, j + 1, border, border_value)
    p11 = _gather(src, i + 1, j + 1, border, border_value)
    return _blend(p00, p10, p01, p11, a, b)


def remap_image(
    src: Image, provider, border: str = BORDER_CONSTANT, border_value: int = 0
) -> Image:
    """dst(u, v) = src(map_x(u, v), map_y(u, v)) with bilinear sampling."""
    if provider.width != src.width or provider.height != src.height:
        raise ValueError("map dimensions do not match the image")
    field = provider.remap_field()
    data = bilinear_fetch(src, field.map_x, field.map_y, border, border_value)
    return Image(src.width, src.height, src.channels, data)


def required_lines(bounds: DisplacementBounds, interp_margin: int = 2) -> int:
    """Buffer rows needed to stream this map safely.

    The margin (default 2) covers the second bilinear tap row and the row
    currently being written.
    """
    return math.ceil(bounds.max_dy) - math.floor(bounds.min_dy) + interp_margin


def read_delay(bounds: DisplacementBounds) -> int:
    """Rows between input and output cadence: one more than the largest
    downward reach of any tap."""
    return max(0, math.ceil(bounds.max_dy)) + 1


def stream_remap(
    src: Image,
    provider,
    lines: int | None = None,
    border: str = BORDER_CONSTANT,
    border_value: int = 0,
) -> Image:
    """Row-cadence simulation of the streaming correction datapath.

    One input row is written per step into the circular 4-bank buffer;
    after the read delay one output row is produced per step, each pixel
    reading its four interpolation taps from four distinct banks. ``lines``
    defaults to the safe size for this map's displacement bounds.
    """
    if provider.width != src.width or provider.height != src.height:
        raise ValueError("map dimensions do not match the image")
    field = provider.remap_field()
    bounds = displacement_bounds(field)
    delay = read_delay(bounds)
    if lines is None:
        lines = required_lines(bounds)

    width, height, channels = src.width, src.height, src.channels
    buffer = LineBuffer(lines, width, channels, delay)
    out = np.zeros((height, width, channels), dtype=np.uint8)

    if border not in (BORDER_CONSTANT, BORDER_CLAMP):
        raise ValueError(f"unknown border policy {border!r}")
    map_x, map_y = field.map_x, field.map_y

    def check_tap(ix, iy):
        # Rows actually read from the buffer: the clamp policy reads edge
        # rows for outside taps, the constant policy reads nothing there.
        eff_y = np.clip(iy, 0, height - 1)
        in_img = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
        reads = np.ones_like(in_img) if border == BORDER_CLAMP else in_img
        under = reads & buffer.not_yet_written(eff_y)
        over = reads & buffer.evicted(eff_y)
        return under, over, eff_y

    def read_tap(ix, iy):
        eff_x = np.clip(ix, 0, width - 1)
        eff_y = np.clip(iy, 0, height - 1)
        vals = buffer.gather(eff_x, eff_y).astype(np.float64)
        if border == BORDER_CONSTANT:
            in_img = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
            vals[~in_img] = float(border_value)
        return vals

    for step in range(height + delay):
        if step < height:
            buffer.push_row(step, src.data[step])
        v_out = step - delay
        if not 0 <= v_out < height:
            continue
        sx = map_x[v_out]
        sy = map_y[v_out]
        i = np.floor(sx).astype(np.int64)
        j = np.floor(sy).astype(np.int64)
        a = (sx - i)[:, None]
        b = (sy - j)[:, None]
        taps = ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1))
        # Any 2x2 quartet must land in four distinct banks.
        quartet = 0
        for ix, iy in taps:
            quartet = quartet | (1 << bank_index(ix, iy))
        assert np.all(quartet == 0b1111), "interpolation quartet not bank-distinct"
        # Residency check for the whole quartet; the first violating pixel
        # in scan order is reported, taps examined in raster order within it.
        checks = [check_tap(ix, iy) for ix, iy in taps]
        violated = np.zeros(width, dtype=bool)
        for under, over, _ in checks:
            violated |= under | over
        if np.any(violated):
            u = int(np.argmax(violated))
            for under, over, eff_y in checks:
                if under[u]:
                    raise BufferUnderflow(u, v_out, int(eff_y[u]))
                if over[u]:
                    raise BufferOverwritten(u, v_out, int(eff_y[u]))
        p00, p10, p01, p11 = (read_tap(ix, iy) for ix, iy in taps)
        out[v_out] = _blend(p00, p10, p01, p11, a, b)

    return Image(width, height, channels, out)


# Netpbm I/O: binary PGM (P5) for single channel, PPM (P6) for three.

def write_image(img: Image, path):
    magic = b"P5" if img.channels == 1 else b"P6"
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (img.width, img.height))
        fh.write(img.data.tobytes())


def _read_token(fh) -> bytes:
    token = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise ValueError("unexpected end of netpbm header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_image(path) -> Image:
    with open(path, "rb") as fh:
        magic = _read_token(fh)
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"{path}: unsupported netpbm type {magic!r}")
        width = int(_read_token(fh))
        height = int(_read_token(fh))
        maxval = int(_read_token(fh))
        if maxval != 255:
            raise ValueError(f"{path}: only maxval 255 is supported")
        channels = 1 if magic == b"P5" else 3
        raw = fh.read(width * height * channels)
        if len(raw) != width * height * channels:
            raise ValueError(f"{path}: truncated pixel data")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, channels)
    return Image(width, height, channels, data.copy())
