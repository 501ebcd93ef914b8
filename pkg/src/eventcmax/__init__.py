"""Contrast maximization for event cameras, with divergence and deformation
regularizers that keep the optimizer away from event collapse."""

from .collapse import (
    ObjectiveSpec,
    ObjectiveTerms,
    RegularizerSpec,
    augmented_objective,
    diwe,
    iwa,
    objective_terms,
    r_diwe,
    r_iwa,
)
from .estimators import ContrastMaximization, MotionSegmentation, check_events
from .events import (
    CALIBRATED,
    PIXEL_CENTERED,
    PIXEL_RAW,
    CameraModel,
    EmptySliceError,
    EventFormatError,
    EventSlice,
    FrameMismatchError,
    from_arrays,
    load_calibration,
    load_events,
    normalize_time,
    save_calibration,
    save_events,
    to_frame,
)
from .metrics import FlowImage, aee, flow_from_warp, fwl, rms_angular_velocity
from .objectives import (
    LossKind,
    accumulate_iwe,
    average_timestamp_loss,
    gradient_magnitude_loss,
    variance_loss,
)
from .optimize import (
    EstimationResult,
    ParamBox,
    adaptive_descent,
    default_box,
    landscape_scan,
    sampler_search,
)
from .segmentation import SegmentationResult, em_segment
from .synth import SceneSpec, generate, merge
from .warps import (
    WARP_MODELS,
    InPlane4DOF,
    PlanarSE2,
    Rotation3DOF,
    Sim2,
    Translation2DOF,
    WarpDomainError,
    WarpModel,
    Zoom1DOF,
    get_model_class,
)

__version__ = "0.1.0"
