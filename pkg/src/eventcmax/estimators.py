"""scikit-learn style estimators wrapping the contrast-maximization pipeline.

Inputs are either an :class:`~eventcmax.events.EventSlice` or an ``(N, 4)``
array of ``t, x, y, p`` rows in raw pixel coordinates (then ``camera`` is
required, or inferred from the coordinates).
"""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .collapse import ObjectiveSpec, diwe, iwa, objective_terms
from .events import CameraModel, EventSlice, from_arrays, normalize_time, to_frame
from .metrics import FlowImage, flow_from_warp, fwl
from .objectives import accumulate_iwe, warp_to_pixels
from .optimize import EstimationResult, ParamBox, adaptive_descent, default_box, landscape_scan, sampler_search
from .segmentation import e_step, em_segment
from .warps import WarpModel, get_model_class

OPTIMIZERS = ("sampler", "descent", "scan")


def check_events(X, camera: CameraModel | None = None, t_ref=None) -> EventSlice:
    """Validate ``X`` and return a time-normalized :class:`EventSlice`."""
    if isinstance(X, EventSlice):
        s = X
    else:
        a = check_array(X, ensure_min_samples=1, dtype=float)
        if a.shape[1] != 4:
            raise ValueError(f"expected (N, 4) rows of t, x, y, p; got {a.shape[1]} columns")
        if camera is None:
            camera = CameraModel(int(np.floor(a[:, 1].max())) + 1, int(np.floor(a[:, 2].max())) + 1)
        s = from_arrays(a[:, 0], a[:, 1], a[:, 2], a[:, 3], camera)
    if t_ref is not None and not s.normalized:
        s = dataclasses.replace(s, t_ref=float(t_ref))
    return normalize_time(s)


def check_model_frame(slice_: EventSlice, cls) -> EventSlice:
    """Bring ``slice_`` into the frame the warp class works in."""
    return slice_ if slice_.frame in cls.frames else to_frame(slice_, cls.frames[0])


def _as_box(bounds, cls):
    if bounds is None:
        return default_box(cls)
    if isinstance(bounds, ParamBox):
        return bounds
    lo, hi = bounds
    return ParamBox(lo, hi)


def _as_model(value, cls) -> WarpModel:
    if value is None:
        return cls.identity()
    if isinstance(value, WarpModel):
        return value
    return cls.from_vector(value)


class ContrastMaximization(BaseEstimator, TransformerMixin):
    """Estimate warp parameters by minimizing the (regularized) contrast objective.

    Parameters
    ----------
    warp : str
        Warp kind: ``zoom1dof``, ``trans2dof``, ``rot3dof``, ``se2``,
        ``inplane4dof`` or ``sim2``.
    loss : str
        ``variance``, ``gradmag`` or ``avgts``.
    lambda_div, lambda_def : float
        Weights of the divergence and deformation penalties.
    alpha_div, alpha_def : float
        Margins below which DIWE / IWA pixels are penalized.
    optimizer : str
        ``sampler`` (seeded random search), ``descent`` (Adam with
        finite-difference gradients) or ``scan`` (grid along ``axis``).
    bounds : ParamBox or (lower, upper), optional
        Search box; defaults per warp kind.

    Attributes
    ----------
    params_ : WarpModel
        Best parameters found.
    result_ : EstimationResult
    objective_ : ObjectiveTerms
        Objective components at ``params_``.
    """

    def __init__(
        self,
        warp="zoom1dof",
        loss="variance",
        lambda_div=0.0,
        lambda_def=0.0,
        alpha_div=-0.2,
        alpha_def=0.8,
        epsilon=1.0,
        use_polarity=False,
        optimizer="sampler",
        n_samples=300,
        iters=100,
        step=0.01,
        bounds=None,
        init=None,
        axis=0,
        steps=401,
        seed=0,
        camera=None,
    ):
        self.warp = warp
        self.loss = loss
        self.lambda_div = lambda_div
        self.lambda_def = lambda_def
        self.alpha_div = alpha_div
        self.alpha_def = alpha_def
        self.epsilon = epsilon
        self.use_polarity = use_polarity
        self.optimizer = optimizer
        self.n_samples = n_samples
        self.iters = iters
        self.step = step
        self.bounds = bounds
        self.init = init
        self.axis = axis
        self.steps = steps
        self.seed = seed
        self.camera = camera

    def objective_spec(self) -> ObjectiveSpec:
        return ObjectiveSpec.make(
            self.loss, self.lambda_div, self.lambda_def, self.alpha_div, self.alpha_def,
            self.epsilon, self.use_polarity,
        )

    def _prepare(self, X):
        cls = get_model_class(self.warp)
        return cls, check_model_frame(check_events(X, self.camera), cls)

    def fit(self, X, y=None):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        cls, s = self._prepare(X)
        spec = self.objective_spec()
        box = _as_box(self.bounds, cls)
        init = _as_model(self.init, cls)
        if self.optimizer == "sampler":
            result = sampler_search(s, cls, box, self.n_samples, spec, seed=self.seed)
        elif self.optimizer == "descent":
            result = adaptive_descent(s, cls, init, self.iters, spec, step=self.step,
                                      box=box if self.bounds is not None else None)
        else:
            rows = landscape_scan(s, cls, spec, self.axis, box.lo[self.axis], box.hi[self.axis],
                                  self.steps, fixed=init.to_vector())
            result = _result_from_scan(rows, cls, init, self.axis)
        self.result_ = result
        self.params_ = result.best_params
        self.objective_ = objective_terms(s, self.params_, spec, all_penalties=True)
        self.n_evaluations_ = result.evaluations
        self.frame_ = s.frame
        return self

    def transform(self, X) -> np.ndarray:
        """Warp events to the reference time.

        Returns ``(N, 4)`` rows of normalized time, warped pixel ``x``, ``y``
        and polarity, sorted by time.
        """
        check_is_fitted(self, "params_")
        _, s = self._prepare(X)
        px, py = warp_to_pixels(s, self.params_)
        return np.column_stack([s.t, px, py, s.p.astype(float)])

    def score(self, X, y=None) -> float:
        """Negated objective at the fitted parameters (higher is better)."""
        check_is_fitted(self, "params_")
        _, s = self._prepare(X)
        return -objective_terms(s, self.params_, self.objective_spec()).J

    def iwe(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        _, s = self._prepare(X)
        return accumulate_iwe(s, self.params_, self.use_polarity, self.epsilon)

    def maps(self, X) -> dict:
        """IWE, DIWE and IWA at the fitted parameters."""
        check_is_fitted(self, "params_")
        _, s = self._prepare(X)
        return {
            "iwe": accumulate_iwe(s, self.params_, self.use_polarity, self.epsilon),
            "diwe": diwe(s, self.params_, self.epsilon),
            "iwa": iwa(s, self.params_, self.epsilon),
        }

    def flow(self, camera: CameraModel | None = None) -> FlowImage:
        """Dense displacement field implied by the fitted warp."""
        check_is_fitted(self, "params_")
        camera = camera or self.camera
        if camera is None:
            raise ValueError("a camera is needed to rasterize the flow")
        return flow_from_warp(self.params_, camera, self.frame_)

    def fwl(self, X) -> float:
        check_is_fitted(self, "params_")
        _, s = self._prepare(X)
        return fwl(s, self.params_, self.epsilon)


def _result_from_scan(rows, cls, init: WarpModel, axis: int):
    J = np.array([r.J for r in rows])
    if not np.any(np.isfinite(J)):
        raise RuntimeError("objective undefined everywhere on the scan")
    best = int(np.nanargmin(J))
    theta = init.to_vector()
    trace = []
    for r in rows:
        th = theta.copy()
        th[axis] = r.value
        if np.isfinite(r.J):
            trace.append((th, r.J))
    theta[axis] = rows[best].value
    return EstimationResult(cls.from_vector(theta), float(J[best]), trace, len(rows),
                            int(np.sum(~np.isfinite(J))))


class MotionSegmentation(BaseEstimator, ClusterMixin):
    """Two-cluster EM segmentation, each cluster explained by its own warp.

    Attributes
    ----------
    params_ : list of WarpModel
    responsibilities_ : ndarray of shape (n_events, 2)
    labels_ : ndarray of shape (n_events,)
    """

    def __init__(
        self,
        warps=("zoom1dof", "trans2dof"),
        init=None,
        loss="variance",
        lambda_div=0.0,
        lambda_def=0.0,
        alpha_div=-0.2,
        alpha_def=0.8,
        epsilon=1.0,
        use_polarity=False,
        iters=5,
        n_samples=60,
        bounds=None,
        seed=0,
        camera=None,
    ):
        self.warps = warps
        self.init = init
        self.loss = loss
        self.lambda_div = lambda_div
        self.lambda_def = lambda_def
        self.alpha_div = alpha_div
        self.alpha_def = alpha_def
        self.epsilon = epsilon
        self.use_polarity = use_polarity
        self.iters = iters
        self.n_samples = n_samples
        self.bounds = bounds
        self.seed = seed
        self.camera = camera

    def objective_spec(self) -> ObjectiveSpec:
        return ObjectiveSpec.make(
            self.loss, self.lambda_div, self.lambda_def, self.alpha_div, self.alpha_def,
            self.epsilon, self.use_polarity,
        )

    def fit(self, X, y=None):
        s = check_events(X, self.camera)
        classes = [get_model_class(k) for k in self.warps]
        init = self.init or [None, None]
        models = [_as_model(v, c) for v, c in zip(init, classes)]
        boxes = None
        if self.bounds is not None:
            boxes = [_as_box(b, c) for b, c in zip(self.bounds, classes)]
        res = em_segment(s, classes, models, self.iters, self.objective_spec(),
                         seed=self.seed, n_samples=self.n_samples, boxes=boxes)
        self.result_ = res
        self.params_ = res.params
        self.responsibilities_ = res.responsibilities
        self.labels_ = res.labels
        self.degenerate_ = res.degenerate
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        s = check_events(X, self.camera)
        slices = [check_model_frame(s, type(m)) for m in self.params_]
        resp = np.full((len(s), 2), 0.5)
        return e_step(slices, self.params_, resp, self.objective_spec())

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)
