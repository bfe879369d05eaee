"""Hardware-oriented lens distortion correction.

A floating-point reference remapping model, two hardware-style map
approximations (fixed-point on-the-fly computation and subsampled-LUT
bilinear reconstruction), a functional model of the streaming line-buffer
datapath, and evaluation tools for geometric error and operator cost.
"""

from .model import (
    CameraIntrinsics,
    ConfigError,
    DisplacementBounds,
    DistortionCoefficients,
    LensConfig,
    MappingError,
    RemapField,
    RotationMatrix,
    apply_inverse_rotation,
    build_reference_map,
    config_from_dict,
    displacement_bounds,
    distort,
    load_config,
    normalize_pixel,
    project,
    read_fmap,
    scale_distortion,
    write_fmap,
)
from .fixedpoint import (
    QFormat,
    QValue,
    onthefly_field,
    onthefly_map,
    q_add,
    q_div,
    q_mul,
    q_neg,
    q_sub,
    quantize,
)
from .sampling import (
    SubsampledMap,
    memory_footprint,
    read_smap,
    reconstruct,
    sampled_field,
    subsample,
    write_smap,
)
from .remap import (
    BufferOverwritten,
    BufferUnderflow,
    Image,
    LineBuffer,
    OnTheFlyMapProvider,
    ReferenceMapProvider,
    SampledMapProvider,
    bank_index,
    bilinear_fetch,
    read_delay,
    read_image,
    remap_image,
    required_lines,
    stream_remap,
    write_image,
)
from .evaluate import EvalReport, SweepResult, SweepRow, export_heatmap, geometric_error, sweep
from .resources import (
    ResourceEstimate,
    estimate_full_lut,
    estimate_onthefly,
    estimate_sampling,
)

__version__ = "0.1.0"
