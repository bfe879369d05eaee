"""Signed fixed-point arithmetic and the on-the-fly map computation pipeline.

Values are two's-complement integers scaled by 2^-frac_bits. All operations
round half away from zero and saturate silently, with saturation queryable on
the result. The on-the-fly pipeline evaluates the full correction model per
pixel the way a streaming datapath would: constants quantized once at
configuration time, Horner evaluation of the radial polynomial, and a widened
internal format for intermediates that is narrowed at the output.

The pipeline body is written once against a small arithmetic-backend
interface. Three backends share it: exact scalar arithmetic on Python
integers (:func:`onthefly_map`), vectorized int64 arithmetic
(:func:`onthefly_field`), and an operator tally used by the resource
estimator. This keeps the numeric paths and the hardware-cost model in
lockstep by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import LensConfig, RemapField

__all__ = [
    "QFormat",
    "QValue",
    "quantize",
    "quantize_array",
    "dequantize_array",
    "q_add",
    "q_sub",
    "q_mul",
    "q_div",
    "q_neg",
    "onthefly_map",
    "onthefly_field",
    "count_map_operators",
]

_WIDE_INT_BITS = 16  # internal headroom for r^6 terms and pixel coordinates


@dataclass(frozen=True)
class QFormat:
    """Fixed-point format: ``frac_bits`` fractional bits plus ``int_bits``
    integer bits (sign included)."""

    frac_bits: int
    int_bits: int = 12

    def __post_init__(self):
        if not 1 <= self.frac_bits <= 30:
            raise ValueError("frac_bits must be in 1..30")
        if not 2 <= self.int_bits <= 32:
            raise ValueError("int_bits must be in 2..32")
        if self.frac_bits + self.int_bits > 64:
            raise ValueError("total width must not exceed 64 bits")

    @property
    def total_bits(self) -> int:
        return self.frac_bits + self.int_bits

    @property
    def resolution(self) -> float:
        """Value of one least significant bit."""
        return 2.0 ** -self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_value(self) -> float:
        return self.raw_min * self.resolution

    @property
    def max_value(self) -> float:
        return self.raw_max * self.resolution

    def widened(self) -> "QFormat":
        """Internal working format with extra integer headroom."""
        return QFormat(self.frac_bits, max(self.int_bits, _WIDE_INT_BITS))


@dataclass(frozen=True)
class QValue:
    """One fixed-point number: raw two's-complement integer plus format.

    ``saturated`` is sticky: it is set if this value or anything it was
    computed from was clipped to the representable range.
    """

    raw: int
    fmt: QFormat
    saturated: bool = False

    @property
    def value(self) -> float:
        return self.raw * self.fmt.resolution


def _round_half_away(num: int, den: int) -> int:
    """round(num / den) with ties away from zero; den > 0, exact."""
    q, r = divmod(abs(num), den)
    if 2 * r >= den:
        q += 1
    return q if num >= 0 else -q


def _saturate(raw: int, fmt: QFormat) -> tuple[int, bool]:
    if raw > fmt.raw_max:
        return fmt.raw_max, True
    if raw < fmt.raw_min:
        return fmt.raw_min, True
    return raw, False


def quantize(x: float, fmt: QFormat) -> QValue:
    """Round a real to the nearest representable value, saturating.

    Exact: the scaling and rounding are carried out in rational arithmetic,
    so the result is round-half-away-from-zero of x * 2^frac_bits with no
    intermediate floating-point error.
    """
    if not math.isfinite(x):
        raise ValueError("cannot quantize a non-finite value")
    scaled = Fraction(x) * (1 << fmt.frac_bits)
    raw = _round_half_away(scaled.numerator, scaled.denominator)
    raw, sat = _saturate(raw, fmt)
    return QValue(raw, fmt, sat)


def quantize_array(values: np.ndarray, fmt: QFormat) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized quantize: returns (raw int64 array, saturation mask).

    Matches :func:`quantize` bit for bit: scaling by a power of two is exact
    in float64, and values with magnitude >= 2^52 are already integral.
    """
    scaled = np.asarray(values, dtype=np.float64) * float(1 << fmt.frac_bits)
    if not np.all(np.isfinite(scaled)):
        raise ValueError("cannot quantize non-finite values")
    away = np.where(scaled >= 0.0, np.floor(scaled + 0.5), np.ceil(scaled - 0.5))
    rounded = np.where(np.abs(scaled) >= 2.0**52, scaled, away)
    raw = np.clip(rounded, float(fmt.raw_min), float(fmt.raw_max)).astype(np.int64)
    sat = (rounded > fmt.raw_max) | (rounded < fmt.raw_min)
    return raw, sat


def dequantize_array(raw: np.ndarray, fmt: QFormat) -> np.ndarray:
    return raw.astype(np.float64) * fmt.resolution


def _check_formats(a: QValue, b: QValue):
    if a.fmt != b.fmt:
        raise ValueError("fixed-point operands must share a format")


def q_add(a: QValue, b: QValue) -> QValue:
    _check_formats(a, b)
    raw, sat = _saturate(a.raw + b.raw, a.fmt)
    return QValue(raw, a.fmt, sat or a.saturated or b.saturated)


def q_sub(a: QValue, b: QValue) -> QValue:
    _check_formats(a, b)
    raw, sat = _saturate(a.raw - b.raw, a.fmt)
    return QValue(raw, a.fmt, sat or a.saturated or b.saturated)


def q_neg(a: QValue) -> QValue:
    raw, sat = _saturate(-a.raw, a.fmt)
    return QValue(raw, a.fmt, sat or a.saturated)


def q_mul(a: QValue, b: QValue) -> QValue:
    """Full-width product, then one round-half-away step down to the format."""
    _check_formats(a, b)
    raw = _round_half_away(a.raw * b.raw, 1 << a.fmt.frac_bits)
    raw, sat = _saturate(raw, a.fmt)
    return QValue(raw, a.fmt, sat or a.saturated or b.saturated)


def q_div(a: QValue, b: QValue) -> QValue:
    """round((a.raw << frac_bits) / b.raw), half away from zero."""
    _check_formats(a, b)
    if b.raw == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    num = a.raw << a.fmt.frac_bits
    den = b.raw
    if den < 0:
        num, den = -num, -den
    raw, sat = _saturate(_round_half_away(num, den), a.fmt)
    return QValue(raw, a.fmt, sat or a.saturated or b.saturated)


def _q_double(a: QValue) -> QValue:
    # exact shift; in hardware this is wiring, not an operator
    raw, sat = _saturate(a.raw * 2, a.fmt)
    return QValue(raw, a.fmt, sat or a.saturated)


class _ScalarOps:
    """Exact arithmetic on QValue, valid for every format up to 64 bits."""

    def __init__(self, fmt: QFormat):
        self.fmt = fmt

    def const(self, x: float) -> QValue:
        return quantize(x, self.fmt)

    def coord(self, u: int) -> QValue:
        return quantize(float(u), self.fmt)

    add = staticmethod(q_add)
    sub = staticmethod(q_sub)
    mul = staticmethod(q_mul)
    div = staticmethod(q_div)
    double = staticmethod(_q_double)


class _VectorOps:
    """int64 array arithmetic, bit-identical to the scalar backend.

    Products are split so every intermediate fits in 64 bits:
    a*b = a*(b >> f)*2^f + a*(b & (2^f - 1)), and the rounded shift of the
    low part is exact. :func:`_vector_path_exact` gives the validity bound.
    """

    def __init__(self, fmt: QFormat, shape):
        self.fmt = fmt
        self.f = fmt.frac_bits
        self.mask = np.int64((1 << self.f) - 1)
        self.half = np.int64(1 << (self.f - 1))
        self.sat = np.zeros(shape, dtype=bool)

    def const(self, x: float) -> np.int64:
        q = quantize(x, self.fmt)
        self.sat |= q.saturated
        return np.int64(q.raw)

    def _clip(self, raw: np.ndarray) -> np.ndarray:
        clipped = np.clip(raw, self.fmt.raw_min, self.fmt.raw_max)
        self.sat |= clipped != raw
        return clipped

    def add(self, a, b):
        return self._clip(a + b)

    def sub(self, a, b):
        return self._clip(a - b)

    def double(self, a):
        return self._clip(a * 2)

    def mul(self, a, b):
        # Round half away from zero on the product magnitude: ties must
        # follow the sign of the full product, so work on |a| * |b| split
        # into a shifted high part and an exactly rounded low part.
        negative = (a < 0) != (b < 0)
        aa = np.abs(a)
        ab = np.abs(b)
        mag = aa * (ab >> self.f) + ((aa * (ab & self.mask) + self.half) >> self.f)
        return self._clip(np.where(negative, -mag, mag))

    def div(self, a, b):
        zero = b == 0
        if np.any(zero):
            index = int(np.argmax(zero))
            raise ZeroDivisionError(f"fixed-point division by zero at flat index {index}")
        num = a << self.f
        n = np.abs(num)
        d = np.abs(b)
        q = n // d
        q = q + (2 * (n - q * d) >= d)
        return self._clip(np.where((num < 0) != (b < 0), -q, q))


class _CountingOps:
    """Tallies datapath operators instead of computing.

    Accounting model (documented in :mod:`lensmap.resources`): every multiply
    and divide carries one rounding adder; additions and subtractions are one
    adder; doublings and constant quantization are free.
    """

    def __init__(self):
        self.multipliers = 0
        self.adders = 0
        self.dividers = 0

    def const(self, x: float):
        return None

    def coord(self, u):
        return None

    def add(self, a, b):
        self.adders += 1

    def sub(self, a, b):
        self.adders += 1

    def double(self, a):
        return None

    def mul(self, a, b):
        self.multipliers += 1
        self.adders += 1

    def div(self, a, b):
        self.dividers += 1
        self.adders += 1


@dataclass(frozen=True)
class _Plan:
    """Shape of the evaluation DAG for one configuration."""

    rotation: bool
    rational: bool
    direct_relative: bool  # fold projection into the displacement product


def _plan_for(cfg: LensConfig) -> _Plan:
    rotation = not cfg.rotation.is_identity
    rational = cfg.coeffs.is_rational
    direct = (not rotation) and (not rational) and cfg.new_intrinsics == cfg.intrinsics
    return _Plan(rotation=rotation, rational=rational, direct_relative=direct)


def _constants(cfg: LensConfig, plan: _Plan) -> dict[str, float]:
    c = cfg.coeffs
    const = {
        "cx_n": cfg.new_intrinsics.cx,
        "cy_n": cfg.new_intrinsics.cy,
        "inv_fx_n": 1.0 / cfg.new_intrinsics.fx,
        "inv_fy_n": 1.0 / cfg.new_intrinsics.fy,
        "k1": c.k1,
        "k2": c.k2,
        "k3": c.k3,
        "p1": c.p1,
        "p2": c.p2,
        "two_p1": 2.0 * c.p1,
        "two_p2": 2.0 * c.p2,
        "fx_o": cfg.intrinsics.fx,
        "fy_o": cfg.intrinsics.fy,
    }
    if plan.rotation:
        rt = cfg.rotation.r.T
        for i in range(3):
            for j in range(3):
                const[f"rt{i}{j}"] = float(rt[i, j])
        const["one"] = 1.0
    if plan.rational:
        const.update(k4=c.k4, k5=c.k5, k6=c.k6, one=1.0)
    if not plan.direct_relative:
        const["cx_o"] = cfg.intrinsics.cx
        const["cy_o"] = cfg.intrinsics.cy
    return const


def _run_pipeline(ops, k, u, v, plan: _Plan):
    """One evaluation of the correction chain; returns relative (dx, dy).

    ``u``/``v`` are backend-encoded pixel coordinates, ``k`` the
    backend-encoded constants. The DAG below is the single source of truth
    for both the numeric on-the-fly paths and the operator counts.
    """
    x = ops.mul(ops.sub(u, k["cx_n"]), k["inv_fx_n"])
    y = ops.mul(ops.sub(v, k["cy_n"]), k["inv_fy_n"])

    if plan.rotation:
        bx = ops.add(ops.add(ops.mul(k["rt00"], x), ops.mul(k["rt01"], y)), ops.mul(k["rt02"], k["one"]))
        by = ops.add(ops.add(ops.mul(k["rt10"], x), ops.mul(k["rt11"], y)), ops.mul(k["rt12"], k["one"]))
        bw = ops.add(ops.add(ops.mul(k["rt20"], x), ops.mul(k["rt21"], y)), ops.mul(k["rt22"], k["one"]))
        x = ops.div(bx, bw)
        y = ops.div(by, bw)

    x2 = ops.mul(x, x)
    y2 = ops.mul(y, y)
    xy = ops.mul(x, y)
    r2 = ops.add(x2, y2)

    # Horner form of the radial factor minus one: r2*(k1 + r2*(k2 + r2*k3))
    t = ops.mul(k["k3"], r2)
    t = ops.add(t, k["k2"])
    t = ops.mul(t, r2)
    t = ops.add(t, k["k1"])
    rho = ops.mul(t, r2)

    if plan.rational:
        d = ops.mul(k["k6"], r2)
        d = ops.add(d, k["k5"])
        d = ops.mul(d, r2)
        d = ops.add(d, k["k4"])
        d = ops.mul(d, r2)
        den = ops.add(d, k["one"])
        num = ops.add(rho, k["one"])
        rho = ops.sub(ops.div(num, den), k["one"])

    dx = ops.add(
        ops.add(ops.mul(x, rho), ops.mul(k["two_p1"], xy)),
        ops.mul(k["p2"], ops.add(r2, ops.double(x2))),
    )
    dy = ops.add(
        ops.add(ops.mul(y, rho), ops.mul(k["p1"], ops.add(r2, ops.double(y2)))),
        ops.mul(k["two_p2"], xy),
    )

    if plan.direct_relative:
        rel_x = ops.mul(k["fx_o"], dx)
        rel_y = ops.mul(k["fy_o"], dy)
    else:
        xd = ops.add(x, dx)
        yd = ops.add(y, dy)
        rel_x = ops.sub(ops.add(ops.mul(k["fx_o"], xd), k["cx_o"]), u)
        rel_y = ops.sub(ops.add(ops.mul(k["fy_o"], yd), k["cy_o"]), v)
    return rel_x, rel_y


def _encode_constants(ops, const: dict[str, float]) -> dict:
    return {name: ops.const(value) for name, value in const.items()}


def onthefly_map(u: int, v: int, cfg: LensConfig, fmt: QFormat) -> tuple[QValue, QValue]:
    """Evaluate the map at one pixel entirely in fixed point.

    Returns absolute source coordinates in ``fmt``; saturation anywhere in
    the chain is sticky on the results.
    """
    plan = _plan_for(cfg)
    wide = fmt.widened()
    ops = _ScalarOps(wide)
    k = _encode_constants(ops, _constants(cfg, plan))
    rel_x, rel_y = _run_pipeline(ops, k, ops.coord(u), ops.coord(v), plan)
    # The relative->absolute add happens outside the map module; it is exact.
    sx = q_add(rel_x, ops.coord(u))
    sy = q_add(rel_y, ops.coord(v))
    out_x, sat_x = _saturate(sx.raw, fmt)
    out_y, sat_y = _saturate(sy.raw, fmt)
    return (
        QValue(out_x, fmt, sat_x or sx.saturated),
        QValue(out_y, fmt, sat_y or sy.saturated),
    )


def _vector_path_exact(fmt: QFormat) -> bool:
    """True when the int64 backend is exact for this working format."""
    total = fmt.total_bits
    frac = fmt.frac_bits
    return (2 * total - 2 - frac) <= 62 and (total - 1 + frac) <= 62


def onthefly_field(
    cfg: LensConfig, fmt: QFormat, return_saturation: bool = False
) -> RemapField | tuple[RemapField, np.ndarray]:
    """On-the-fly evaluation over the whole frame.

    Deterministic and bit-identical to per-pixel :func:`onthefly_map`. The
    vectorized int64 path covers every format whose widened products fit in
    64 bits (all the usual ones); wider formats fall back to the exact
    scalar path.
    """
    width, height = cfg.image_width, cfg.image_height
    plan = _plan_for(cfg)
    wide = fmt.widened()

    if _vector_path_exact(wide):
        uu, vv = np.meshgrid(np.arange(width, dtype=np.int64), np.arange(height, dtype=np.int64))
        ops = _VectorOps(wide, (height, width))
        k = _encode_constants(ops, _constants(cfg, plan))
        u_raw = ops._clip(uu << wide.frac_bits)
        v_raw = ops._clip(vv << wide.frac_bits)
        rel_x, rel_y = _run_pipeline(ops, k, u_raw, v_raw, plan)
        sx = rel_x + u_raw
        sy = rel_y + v_raw
        sat = ops.sat | (sx > fmt.raw_max) | (sx < fmt.raw_min)
        sat |= (sy > fmt.raw_max) | (sy < fmt.raw_min)
        sx = np.clip(sx, fmt.raw_min, fmt.raw_max)
        sy = np.clip(sy, fmt.raw_min, fmt.raw_max)
        map_x = dequantize_array(sx, fmt)
        map_y = dequantize_array(sy, fmt)
    else:
        map_x = np.empty((height, width), dtype=np.float64)
        map_y = np.empty((height, width), dtype=np.float64)
        sat = np.zeros((height, width), dtype=bool)
        for v in range(height):
            for u in range(width):
                qx, qy = onthefly_map(u, v, cfg, fmt)
                map_x[v, u] = qx.value
                map_y[v, u] = qy.value
                sat[v, u] = qx.saturated or qy.saturated

    field = RemapField(width, height, map_x, map_y)
    if return_saturation:
        return field, sat
    return field


def count_map_operators(cfg: LensConfig) -> tuple[int, int, int]:
    """(multipliers, adders, dividers) of the on-the-fly DAG for ``cfg``.

    Walks exactly the pipeline the numeric backends execute, so structural
    simplifications (identity rotation, all-zero rational coefficients,
    matching output intrinsics) are reflected in the counts.
    """
    plan = _plan_for(cfg)
    ops = _CountingOps()
    k = _encode_constants(ops, _constants(cfg, plan))
    _run_pipeline(ops, k, None, None, plan)
    return ops.multipliers, ops.adders, ops.dividers
