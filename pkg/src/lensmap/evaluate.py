"""Geometric-error evaluation of candidate maps against the float reference,
distortion-factor sweeps, and export of the data behind the accuracy plots."""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fixedpoint import QFormat, onthefly_field
from .model import LensConfig, RemapField, build_reference_map
from .remap import Image
from .resources import estimate_onthefly, estimate_sampling
from .sampling import subsample, sampled_field

__all__ = [
    "EvalReport",
    "SweepRow",
    "SweepResult",
    "geometric_error",
    "export_heatmap",
    "error_plane_bytes",
    "sweep",
]

CSV_HEADER = "approach,param,factor,rmse,mean,max,mem_bits,mul,add,div"


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Per-pixel Euclidean map error (px) plus aggregate statistics."""

    width: int
    height: int
    error_field: np.ndarray
    rmse: float
    mean: float
    max: float


def geometric_error(candidate: RemapField, reference: RemapField) -> EvalReport:
    """Euclidean distance between candidate and reference map vectors."""
    if (candidate.width, candidate.height) != (reference.width, reference.height):
        raise ValueError("candidate and reference dimensions differ")
    err = np.hypot(
        candidate.map_x - reference.map_x, candidate.map_y - reference.map_y
    )
    return EvalReport(
        width=candidate.width,
        height=candidate.height,
        error_field=err,
        rmse=float(np.sqrt(np.mean(err * err))),
        mean=float(np.mean(err)),
        max=float(np.max(err)),
    )


def export_heatmap(report: EvalReport, scale: float) -> Image:
    """Grayscale rendering of the error field, saturating at ``scale`` px."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    intensity = np.floor(255.0 * np.minimum(report.error_field / scale, 1.0) + 0.5)
    return Image.from_array(intensity.astype(np.uint8))


def error_plane_bytes(report: EvalReport) -> bytes:
    """Error field as flat row-major little-endian float32, for plotting."""
    return report.error_field.astype("<f4").tobytes()


@dataclass(frozen=True)
class SweepRow:
    approach: str
    param: int
    factor: float
    rmse: float
    mean: float
    max: float
    mem_bits: int
    mul: int
    add: int
    div: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(
                f"{r.approach},{r.param},{r.factor:.12g},{r.rmse:.12g},"
                f"{r.mean:.12g},{r.max:.12g},{r.mem_bits},{r.mul},{r.add},{r.div}\n"
            )
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _evaluate_factor(
    base: LensConfig,
    factor: float,
    frac_bits: tuple[int, ...],
    int_bits: int,
    sampling_factors: tuple[int, ...],
    sample_frac_bits: int,
    sample_int_bits: int,
    on_report=None,
) -> list[SweepRow]:
    cfg = base.with_factor(factor)
    reference = build_reference_map(cfg)
    rows = []
    for bits in frac_bits:
        candidate = onthefly_field(cfg, QFormat(bits, int_bits))
        report = geometric_error(candidate, reference)
        est = estimate_onthefly(cfg)
        rows.append(
            SweepRow("onthefly", bits, factor, report.rmse, report.mean, report.max,
                     est.memory_bits, est.multipliers, est.adders, est.dividers)
        )
        if on_report is not None:
            on_report("onthefly", bits, factor, report)
    for n in sampling_factors:
        smap = subsample(reference, n, sample_frac_bits, sample_int_bits)
        candidate = sampled_field(smap)
        report = geometric_error(candidate, reference)
        est = estimate_sampling(smap.grid_w, smap.grid_h, smap.sample_fmt.total_bits)
        rows.append(
            SweepRow("sampled", n, factor, report.rmse, report.mean, report.max,
                     est.memory_bits, est.multipliers, est.adders, est.dividers)
        )
        if on_report is not None:
            on_report("sampled", n, factor, report)
    return rows


def sweep(
    base: LensConfig,
    factors,
    frac_bits=(12, 16, 20),
    int_bits: int = 12,
    sampling_factors=(5, 6, 7),
    sample_frac_bits: int = 8,
    sample_int_bits: int = 13,
    threads: int = 1,
    on_report=None,
) -> SweepResult:
    """Evaluate every approach/parameter combination at each distortion factor.

    Rows are ordered by (factor, approach, parameter) regardless of the
    number of worker threads. ``on_report`` receives each cell's EvalReport
    as it is produced (used for heatmap/error-plane export).
    """
    factors = tuple(factors)
    if not factors:
        raise ValueError("factors must be non-empty")
    frac_bits = tuple(frac_bits)
    sampling_factors = tuple(sampling_factors)

    def job(factor: float) -> list[SweepRow]:
        return _evaluate_factor(
            base, factor, frac_bits, int_bits,
            sampling_factors, sample_frac_bits, sample_int_bits, on_report,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_factor = list(pool.map(job, factors))
    else:
        per_factor = [job(f) for f in factors]

    rows: list[SweepRow] = []
    for chunk in per_factor:
        rows.extend(chunk)
    return SweepResult(tuple(rows))
