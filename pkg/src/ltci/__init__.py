"""Long-time coherent integration detectors for maneuvering radar targets.

Standard GRFT family (FD-GRFT, TD-GRFT, KT-MFP) and their dual-scale
counterparts (DS-GRFT, DS-KT-MFP), plus a benchmark harness.
"""

from ltci.signal_model import (
    C,
    FreqPulseCube,
    MotionParams,
    RadarParams,
    RangePulseCube,
    Target,
    add_noise,
    asinc,
    range_fft,
    range_ifft,
    slant_range,
    synthesize_cube,
)
from ltci.search_space import (
    AmbiguitySpace,
    ConditionViolated,
    DualScaleSpace,
    SingleScaleSpace,
    StepSizes,
    build_ambiguity,
    build_dual_scale,
    build_single_scale,
    decompose,
    recompose,
    split_velocity,
    step_sizes,
)
from ltci.transforms import build_mf, gft, gift, keystone, mgift
from ltci.detectors import (
    Detection,
    DetectionMap,
    OpCounters,
    ds_grft,
    ds_kt_mfp,
    extract_detections,
    fd_grft,
    kt_mfp,
    td_grft,
    threshold,
)

__version__ = "0.1.0"
