"""Accuracy metrics: dense flow from a warp, AEE/NPE, FWL and angular-velocity RMS."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .events import CameraModel, EventSlice
from .objectives import accumulate_iwe, variance_loss
from .warps import WarpDomainError, WarpModel

NPE_THRESHOLDS = (3, 10, 20)


@dataclass(frozen=True, eq=False)
class FlowImage:
    """Per-pixel displacement (pixels over the slice) and validity mask, ``(height, width)``."""

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if not (u.shape == v.shape == valid.shape) or u.ndim != 2:
            raise ValueError("u, v and valid must be 2D arrays of equal shape")
        if not (np.all(np.isfinite(u[valid])) and np.all(np.isfinite(v[valid]))):
            raise ValueError("flow must be finite wherever valid")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


def flow_from_warp(model: WarpModel, camera: CameraModel, frame: str | None = None) -> FlowImage:
    """Displacement from t0 to t1 that ``model`` compensates, at every pixel center.

    The warp is evaluated in ``frame`` (default: the model's own) and the
    result is expressed in raw pixel units.
    """
    frame = frame or model.frame
    py, px = np.mgrid[0 : camera.height, 0 : camera.width].astype(float)
    x, y = camera.from_pixels(px, py, frame)
    valid = np.ones(px.shape, dtype=bool)
    try:
        xw, yw = model.warp(x, y, 1.0)
    except WarpDomainError:
        return FlowImage(np.zeros_like(px), np.zeros_like(px), np.zeros_like(valid))
    qx, qy = camera.to_pixels(xw, yw, frame)
    u, v = px - qx, py - qy
    valid &= np.isfinite(u) & np.isfinite(v)
    return FlowImage(np.where(valid, u, 0.0), np.where(valid, v, 0.0), valid)


def aee(pred: FlowImage, gt: FlowImage, thresholds=NPE_THRESHOLDS):
    """Average endpoint error and the percentage of pixels above each threshold.

    Returns ``(aee, {threshold: percent})`` over pixels valid in both fields.
    """
    if pred.u.shape != gt.u.shape:
        raise ValueError("flow fields have different dimensions")
    mask = pred.valid & gt.valid
    if not mask.any():
        raise ValueError("no pixel is valid in both flow fields")
    err = np.hypot(pred.u[mask] - gt.u[mask], pred.v[mask] - gt.v[mask])
    npe = {n: 100.0 * float(np.mean(err > n)) for n in thresholds}
    return float(err.mean()), npe


def fwl(slice_: EventSlice, model: WarpModel, epsilon: float = 1.0) -> float:
    """IWE variance under ``model`` relative to the identity warp (polarity off)."""
    ident = model.identity()
    base = variance_loss(accumulate_iwe(slice_, ident, False, epsilon))
    if base == 0:
        raise ValueError("identity IWE has zero variance; FWL undefined")
    if model == ident:
        return 1.0
    return variance_loss(accumulate_iwe(slice_, model, False, epsilon)) / base


def rms_angular_velocity(estimates, gt, tolerance: float | None = None) -> float:
    """RMS of ``|w_est - w_gt|`` over estimates matched to the nearest ground truth.

    ``estimates`` and ``gt`` are sequences of ``(t, (w1, w2, w3))``. Matches
    farther apart than ``tolerance`` in time are discarded; by default the
    tolerance is half the median spacing of the estimates (or unbounded for a
    single estimate).
    """
    est_t = np.array([float(t) for t, _ in estimates])
    est_w = np.array([np.asarray(w, dtype=float) for _, w in estimates]).reshape(-1, 3)
    gt_t = np.array([float(t) for t, _ in gt])
    gt_w = np.array([np.asarray(w, dtype=float) for _, w in gt]).reshape(-1, 3)
    if len(est_t) == 0 or len(gt_t) == 0:
        raise ValueError("no estimates or ground truth to match")
    if tolerance is None:
        tolerance = 0.5 * float(np.median(np.diff(np.sort(est_t)))) if len(est_t) > 1 else np.inf
    idx = np.abs(est_t[:, None] - gt_t[None, :]).argmin(axis=1)
    ok = np.abs(est_t - gt_t[idx]) <= tolerance
    if not ok.any():
        raise ValueError("no estimate matched a ground-truth sample")
    err = np.linalg.norm(est_w[ok] - gt_w[idx[ok]], axis=1)
    return float(np.sqrt(np.mean(err**2)))


def write_flow_csv(flow: FlowImage, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "u", "v", "valid"])
        for yy in range(flow.height):
            for xx in range(flow.width):
                w.writerow([xx, yy, repr(float(flow.u[yy, xx])), repr(float(flow.v[yy, xx])),
                            int(flow.valid[yy, xx])])


def read_flow_csv(path) -> FlowImage:
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size == 0:
        raise ValueError(f"{path}: empty flow file")
    data = np.atleast_1d(data)
    xs = data["x"].astype(int)
    ys = data["y"].astype(int)
    w, h = xs.max() + 1, ys.max() + 1
    u = np.zeros((h, w))
    v = np.zeros((h, w))
    valid = np.zeros((h, w), dtype=bool)
    u[ys, xs] = data["u"]
    v[ys, xs] = data["v"]
    valid[ys, xs] = data["valid"] > 0
    return FlowImage(u, v, valid)
