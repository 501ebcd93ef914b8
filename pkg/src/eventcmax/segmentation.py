"""Two-cluster motion segmentation by expectation-maximization over warps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .collapse import ObjectiveSpec, objective_terms
from .events import EventSlice, to_frame
from .objectives import Splat, event_values, warp_to_pixels
from .optimize import ParamBox, default_box, sampler_search
from .warps import WarpModel, get_model_class

logger = logging.getLogger(__name__)

FLOOR = 0.1
DEGENERATE_FRACTION = 1e-3


@dataclass
class SegmentationResult:
    responsibilities: np.ndarray
    params: list
    degenerate: list = field(default_factory=list)
    history: list = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        return self.responsibilities.argmax(axis=1)


def _iwe_at_events(slice_: EventSlice, model: WarpModel, weights, spec: ObjectiveSpec) -> np.ndarray:
    """Weighted IWE of ``model`` sampled at each event's warped pixel (0 off-image)."""
    px, py = warp_to_pixels(slice_, model)
    splat = Splat(px, py, slice_.camera.width, slice_.camera.height, spec.epsilon)
    img = splat.image(event_values(slice_, spec.use_polarity, weights))
    out = np.zeros(len(slice_))
    ok = splat.inside
    out[ok] = img[np.rint(py[ok]).astype(int), np.rint(px[ok]).astype(int)]
    return out


def e_step(slices, models, resp, spec: ObjectiveSpec) -> np.ndarray:
    """Responsibilities proportional to each cluster's IWE at the warped event, plus a floor."""
    like = np.column_stack(
        [_iwe_at_events(s, m, resp[:, j], spec) for j, (s, m) in enumerate(zip(slices, models))]
    )
    like = np.maximum(like, 0.0) + FLOOR
    return like / like.sum(axis=1, keepdims=True)


def em_segment(
    slice_: EventSlice,
    kinds,
    init,
    iters: int,
    spec: ObjectiveSpec,
    seed: int = 0,
    n_samples: int = 60,
    boxes=None,
) -> SegmentationResult:
    """Alternate E- and M-steps for two warp clusters.

    Each M-step runs :func:`sampler_search` per cluster on the
    responsibility-weighted objective, starting from the current estimate.
    """
    if len(kinds) != 2 or len(init) != 2:
        raise ValueError("segmentation uses exactly two clusters")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    classes = [get_model_class(k) for k in kinds]
    models = [
        m if isinstance(m, WarpModel) else c.from_vector(m) for c, m in zip(classes, init)
    ]
    boxes = [b if isinstance(b, ParamBox) else default_box(c) for c, b in
             zip(classes, boxes or [None, None])]
    slices = [to_frame(slice_, c.frames[0]) if slice_.frame not in c.frames else slice_
              for c in classes]
    n = len(slice_)
    resp = np.full((n, 2), 0.5)
    result = SegmentationResult(resp, models)
    for it in range(iters):
        resp = e_step(slices, models, resp, spec)
        for j in range(2):
            r = sampler_search(
                slices[j], classes[j], boxes[j], n_samples, spec,
                seed=seed + 1000 * it + j, weights=resp[:, j], init=models[j],
            )
            models[j] = r.best_params
        share = resp.sum(axis=0) / max(n, 1)
        result.history.append((list(models), share))
        logger.info("EM iteration %d: %s, weights %s", it, models, np.round(share, 3))
    resp = e_step(slices, models, resp, spec)
    result.responsibilities = resp
    result.params = models
    result.degenerate = [bool(resp[:, j].sum() < DEGENERATE_FRACTION * n) for j in range(2)]
    return result


def cluster_penalty(slice_: EventSlice, model: WarpModel, weights, spec: ObjectiveSpec) -> float:
    """Divergence penalty of one cluster's weighted events (diagnostics)."""
    if slice_.frame not in model.frames:
        slice_ = to_frame(slice_, model.frame)
    return objective_terms(slice_, model, spec, weights, all_penalties=True).R_div
