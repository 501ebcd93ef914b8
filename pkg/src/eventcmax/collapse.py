"""Event-collapse metrics and the regularized objective.

Two families of per-event statistics characterize collapse: the divergence of
the warp's flow field and the area amplification ``|det J|`` of the warp.
Their per-pixel averages (DIWE and IWA maps) feed one-sided hinge penalties
that only activate below a margin, so admissible warps are left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import EventSlice
from .objectives import (
    MASS_THRESHOLD,
    LossKind,
    Splat,
    _avgts_from_splat,
    check_frame,
    event_values,
    gradient_magnitude_loss,
    splat_events,
    variance_loss,
)
from .warps import WarpModel


@dataclass(frozen=True)
class RegularizerSpec:
    lambda_div: float = 0.0
    lambda_def: float = 0.0
    alpha_div: float = -0.2
    alpha_def: float = 0.8

    def __post_init__(self):
        for name in ("lambda_div", "lambda_def"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Everything that defines ``J(theta)`` apart from the data and the warp."""

    loss: LossKind = LossKind.VARIANCE
    reg: RegularizerSpec = field(default_factory=RegularizerSpec)
    epsilon: float = 1.0
    use_polarity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "loss", LossKind.parse(self.loss))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def make(cls, loss="variance", lambda_div=0.0, lambda_def=0.0, alpha_div=-0.2,
             alpha_def=0.8, epsilon=1.0, use_polarity=False) -> "ObjectiveSpec":
        return cls(LossKind.parse(loss), RegularizerSpec(lambda_div, lambda_def, alpha_div, alpha_def),
                   epsilon, use_polarity)


@dataclass(frozen=True)
class ObjectiveTerms:
    """Components of one objective evaluation.

    ``G`` is the fidelity score oriented for maximization; for the
    average-timestamp loss it is the negated loss.
    """

    G: float
    R_div: float
    R_def: float
    J: float


def per_event_divergence(slice_: EventSlice, model: WarpModel) -> np.ndarray:
    check_frame(slice_, model)
    if len(slice_) == 0:
        return np.zeros(0)
    return model.divergence(slice_.x, slice_.y, slice_.relative_time())


def per_event_detjac(slice_: EventSlice, model: WarpModel) -> np.ndarray:
    check_frame(slice_, model)
    if len(slice_) == 0:
        return np.zeros(0)
    return np.abs(model.det_jacobian(slice_.x, slice_.y, slice_.relative_time()))


def mean_divergence(divs) -> float:
    divs = np.asarray(divs, dtype=float)
    if divs.size == 0:
        raise ValueError("mean of an empty divergence set")
    return float(divs.mean())


def mean_detjac(dets) -> float:
    dets = np.asarray(dets, dtype=float)
    if dets.size == 0:
        raise ValueError("mean of an empty amplification set")
    return float(dets.mean())


def _average_map(splat: Splat, values, weights, empty_value: float, offset: float = 0.0):
    vals = np.asarray(values, dtype=float)
    if vals.size and np.all(vals == vals[0]):
        # a constant field averages to itself exactly
        offset = float(vals[0])
    vals = vals - offset
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        vals = vals * weights
    mass = splat.image(weights)
    acc = splat.image(vals)
    out = np.full(mass.shape, empty_value)
    occ = mass > MASS_THRESHOLD
    out[occ] = offset + acc[occ] / mass[occ]
    return out


def diwe_from_splat(splat: Splat, divs, weights=None) -> np.ndarray:
    return _average_map(splat, divs, weights, 0.0)


def iwa_from_splat(splat: Splat, dets, weights=None) -> np.ndarray:
    return _average_map(splat, dets, weights, 1.0, offset=1.0)


def diwe(slice_: EventSlice, model: WarpModel, epsilon: float = 1.0, weights=None) -> np.ndarray:
    """Per-pixel average divergence of the events warped to each pixel (0 where empty)."""
    divs = per_event_divergence(slice_, model)
    return diwe_from_splat(splat_events(slice_, model, epsilon), divs, weights)


def iwa(slice_: EventSlice, model: WarpModel, epsilon: float = 1.0, weights=None) -> np.ndarray:
    """Per-pixel average area amplification of warped events (1 where empty)."""
    dets = per_event_detjac(slice_, model)
    return iwa_from_splat(splat_events(slice_, model, epsilon), dets, weights)


def _trimmed_hinge(img, alpha: float) -> float:
    img = np.asarray(img, dtype=float)
    sel = img < alpha
    if not sel.any():
        return 0.0
    return float(np.mean(alpha - img[sel]))


def r_diwe(diwe_img, alpha_div: float = -0.2) -> float:
    """Mean shortfall below ``alpha_div`` over the DIWE pixels that fall below it."""
    return _trimmed_hinge(diwe_img, alpha_div)


def r_iwa(iwa_img, alpha_def: float = 0.8) -> float:
    """Mean shortfall below ``alpha_def`` over the IWA pixels that fall below it."""
    return _trimmed_hinge(iwa_img, alpha_def)


def objective_terms(
    slice_: EventSlice,
    model: WarpModel,
    spec: ObjectiveSpec,
    weights=None,
    all_penalties: bool = False,
) -> ObjectiveTerms:
    """Evaluate ``J = -G + lambda_div * R_DIWE + lambda_def * R_IWA``.

    Events are warped once; IWE, DIWE and IWA share the same footprints.
    ``weights`` are optional per-event soft assignments (segmentation).
    Penalties with zero weight are skipped unless ``all_penalties`` is set.
    """
    splat = splat_events(slice_, model, spec.epsilon)
    if spec.loss is LossKind.AVERAGE_TIMESTAMP:
        G = -_avgts_from_splat(splat, slice_.t, weights)
    else:
        iwe = splat.image(event_values(slice_, spec.use_polarity, weights))
        if spec.loss is LossKind.VARIANCE:
            G = variance_loss(iwe)
        else:
            G = gradient_magnitude_loss(iwe)
    reg = spec.reg
    r_div = r_def = 0.0
    if reg.lambda_div > 0 or all_penalties:
        divs = per_event_divergence(slice_, model)
        r_div = r_diwe(diwe_from_splat(splat, divs, weights), reg.alpha_div)
    if reg.lambda_def > 0 or all_penalties:
        dets = per_event_detjac(slice_, model)
        r_def = r_iwa(iwa_from_splat(splat, dets, weights), reg.alpha_def)
    J = -G + reg.lambda_div * r_div + reg.lambda_def * r_def
    return ObjectiveTerms(G, r_div, r_def, J)


def augmented_objective(
    slice_: EventSlice, model: WarpModel, spec: ObjectiveSpec, weights=None
) -> float:
    return objective_terms(slice_, model, spec, weights).J
