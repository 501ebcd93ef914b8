"""Synthetic event streams with exact ground truth.

Events are produced by inverse-warping a fixed set of reference edge points:
an event at normalized time ``t`` sits where the true warp would carry it back
onto its reference point, so the true parameters align the stream perfectly
(up to the added noise).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .events import PIXEL_RAW, CameraModel, EventSlice
from .metrics import FlowImage, flow_from_warp
from .warps import WarpDomainError, WarpModel

MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class SceneSpec:
    n_points: int = 60
    distribution: str = "uniform"
    n_events: int = 50_000
    noise_std: float = 0.5
    seed: int = 0
    duration: float = 1.0
    margin: float = 3.0

    def __post_init__(self):
        if self.n_points < 1 or self.n_events < 1:
            raise ValueError("n_points and n_events must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.distribution not in ("uniform", "grid-lines"):
            raise ValueError(f"unknown point distribution {self.distribution!r}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")


class GenerationError(RuntimeError):
    """Raised when too many events fall out of the frame."""


def reference_points(scene: SceneSpec, camera: CameraModel, rng) -> np.ndarray:
    """Reference edge points in raw pixel coordinates, ``(n_points, 2)``."""
    m = scene.margin
    lo = np.array([m, m])
    hi = np.array([camera.width - 1 - m, camera.height - 1 - m])
    if np.any(hi <= lo):
        raise ValueError("camera too small for the requested margin")
    if scene.distribution == "uniform":
        return rng.uniform(lo, hi, size=(scene.n_points, 2))
    # points spread along a few horizontal and vertical lines
    n_lines = max(1, int(np.sqrt(scene.n_points) / 2))
    pts = []
    for i in range(scene.n_points):
        line = i % (2 * n_lines)
        frac = rng.uniform()
        pos = (line // 2 + 1) / (n_lines + 1)
        if line % 2 == 0:
            pts.append((lo[0] + frac * (hi[0] - lo[0]), lo[1] + pos * (hi[1] - lo[1])))
        else:
            pts.append((lo[0] + pos * (hi[0] - lo[0]), lo[1] + frac * (hi[1] - lo[1])))
    return np.array(pts)


def _times(n: int, rng) -> np.ndarray:
    t = rng.uniform(0.0, 1.0, size=n)
    if n >= 2:
        # pin the extremes so normalizing the timestamps reproduces t exactly
        t[rng.choice(n, size=2, replace=False)] = (0.0, 1.0)
    return t


def generate(scene: SceneSpec, model: WarpModel, camera: CameraModel,
             return_labels: bool = False):
    """Generate ``(EventSlice, FlowImage)`` for true parameters ``model``.

    The slice is in the raw pixel frame with timestamps in ``[0, duration]``
    seconds and the reference time at 0. With ``return_labels`` the index of
    each event's reference point is returned as a third element.
    """
    rng = np.random.default_rng(scene.seed)
    refs = reference_points(scene, camera, rng)
    n = scene.n_events
    t = _times(n, rng)
    px = np.empty(n)
    py = np.empty(n)
    which = np.empty(n, dtype=np.int64)
    pending = np.arange(n)
    frame = model.frame
    for _ in range(MAX_ATTEMPTS):
        if pending.size == 0:
            break
        k = rng.integers(0, len(refs), size=pending.size)
        rx, ry = camera.from_pixels(refs[k, 0], refs[k, 1], frame)
        try:
            ix, iy = model.inverse_warp(rx, ry, t[pending])
        except WarpDomainError as exc:
            raise GenerationError(f"true warp is singular over the slice: {exc}") from None
        qx, qy = camera.to_pixels(ix, iy, frame)
        noise = rng.normal(0.0, scene.noise_std, size=(pending.size, 2)) if scene.noise_std > 0 else 0.0
        qx = qx + (noise[:, 0] if scene.noise_std > 0 else 0.0)
        qy = qy + (noise[:, 1] if scene.noise_std > 0 else 0.0)
        ok = (qx >= 0) & (qx <= camera.width - 1) & (qy >= 0) & (qy <= camera.height - 1)
        done = pending[ok]
        px[done], py[done], which[done] = qx[ok], qy[ok], k[ok]
        pending = pending[~ok]
    if pending.size:
        raise GenerationError(
            f"{pending.size} events still out of frame after {MAX_ATTEMPTS} attempts"
        )
    p = rng.choice(np.array([-1, 1]), size=n)
    order = np.argsort(t, kind="stable")
    slice_ = EventSlice(
        t=t[order] * scene.duration,
        x=px[order],
        y=py[order],
        p=p[order],
        camera=camera,
        t0=0.0,
        t1=scene.duration,
        t_ref=0.0,
        frame=PIXEL_RAW,
    )
    flow = flow_from_warp(model, camera, frame)
    if return_labels:
        return slice_, flow, which[order]
    return slice_, flow


def merge(*slices: EventSlice) -> tuple[EventSlice, np.ndarray]:
    """Union of slices sharing a camera and frame; returns ``(slice, source index)``."""
    if not slices:
        raise ValueError("nothing to merge")
    first = slices[0]
    t = np.concatenate([s.t for s in slices])
    src = np.concatenate([np.full(len(s), i) for i, s in enumerate(slices)])
    order = np.argsort(t, kind="stable")
    merged = dataclasses.replace(
        first,
        t=t[order],
        x=np.concatenate([s.x for s in slices])[order],
        y=np.concatenate([s.y for s in slices])[order],
        p=np.concatenate([s.p for s in slices])[order],
        t0=min(s.t0 for s in slices),
        t1=max(s.t1 for s in slices),
        t_ref=first.t_ref,
    )
    return merged, src[order]


def ground_truth(model: WarpModel, camera: CameraModel) -> FlowImage:
    return flow_from_warp(model, camera, model.frame)
