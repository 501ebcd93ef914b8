"""Image of warped events (IWE) and the contrast losses computed on it.

Images are plain ``(height, width)`` float arrays, row-major.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .events import EventSlice, FrameMismatchError
from .warps import WarpModel

MASS_THRESHOLD = 1e-6


class LossKind(str, enum.Enum):
    VARIANCE = "variance"
    GRADIENT_MAGNITUDE = "gradmag"
    AVERAGE_TIMESTAMP = "avgts"

    @classmethod
    def parse(cls, value) -> "LossKind":
        if isinstance(value, cls):
            return value
        aliases = {"gradient_magnitude": "gradmag", "average_timestamp": "avgts"}
        return cls(aliases.get(value, value))


class Splat:
    """Truncated-Gaussian footprints of a set of points on the pixel grid.

    Each point spreads over a ``(2R+1) x (2R+1)`` window around its nearest
    pixel, ``R = ceil(3 * epsilon)``. The weights are normalized over the whole
    window, so a point far from the border deposits exactly unit mass. Points
    whose nearest pixel lies outside the image are dropped, and so is the part
    of a footprint hanging over the border.
    """

    def __init__(self, px, py, width: int, height: int, epsilon: float = 1.0):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        self.width, self.height = int(width), int(height)
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        self.n_points = len(px)
        with np.errstate(invalid="ignore"):
            ix = np.rint(px)
            iy = np.rint(py)
        inside = (
            np.isfinite(ix) & np.isfinite(iy)
            & (ix >= 0) & (ix < self.width) & (iy >= 0) & (iy < self.height)
        )
        self.inside = inside
        self.all_inside = bool(inside.all())
        if not self.all_inside:
            ix, iy, px, py = ix[inside], iy[inside], px[inside], py[inside]
        ix = ix.astype(np.int64)
        iy = iy.astype(np.int64)

        r = self.radius = int(math.ceil(3.0 * epsilon))
        off = np.arange(-r, r + 1)
        gx = np.exp(-((ix[:, None] + off - px[:, None]) ** 2) / (2.0 * epsilon**2))
        gy = np.exp(-((iy[:, None] + off - py[:, None]) ** 2) / (2.0 * epsilon**2))
        gx /= gx.sum(axis=1, keepdims=True)
        gy /= gy.sum(axis=1, keepdims=True)
        # accumulate on a grid padded by r so every footprint index is valid
        pw = self.width + 2 * r
        base = iy * pw + ix
        self._offsets = (off[:, None] * pw + off[None, :]).ravel() + r * pw + r
        self._index = (base[:, None] + self._offsets[None, :]).ravel()
        self._weights = (gy[:, :, None] * gx[:, None, :]).reshape(len(ix), off.size**2)
        self._mass = None

    def image(self, values=None) -> np.ndarray:
        """Deposit ``values`` (one per point; default 1) and return the image."""
        if values is None:
            if self._mass is None:
                self._mass = self._accumulate(self._weights)
            return self._mass.copy()
        values = np.asarray(values, dtype=float)
        if not self.all_inside:
            values = values[self.inside]
        return self._accumulate(self._weights * values[:, None])

    def _accumulate(self, w) -> np.ndarray:
        r = self.radius
        ph, pw = self.height + 2 * r, self.width + 2 * r
        img = np.bincount(self._index, weights=w.ravel(), minlength=ph * pw)
        return img.reshape(ph, pw)[r : r + self.height, r : r + self.width]


def check_frame(slice_: EventSlice, model: WarpModel) -> None:
    if slice_.frame not in model.frames:
        raise FrameMismatchError(
            f"warp {model.kind!r} needs frame {model.frame!r}, slice is in {slice_.frame!r}"
        )


def warp_to_pixels(slice_: EventSlice, model: WarpModel):
    """Warp every event to the reference time; returns raw pixel coordinates."""
    check_frame(slice_, model)
    xw, yw = model.warp(slice_.x, slice_.y, slice_.relative_time())
    return slice_.camera.to_pixels(xw, yw, slice_.frame)


def splat_events(slice_: EventSlice, model: WarpModel, epsilon: float = 1.0) -> Splat:
    px, py = warp_to_pixels(slice_, model)
    return Splat(px, py, slice_.camera.width, slice_.camera.height, epsilon)


def event_values(slice_: EventSlice, use_polarity: bool = False, weights=None):
    """Per-event contributions ``b_k`` (times optional soft weights)."""
    b = slice_.p.astype(float) if use_polarity else np.ones(len(slice_))
    if weights is not None:
        b = b * np.asarray(weights, dtype=float)
    return b


def accumulate_iwe(
    slice_: EventSlice,
    model: WarpModel,
    use_polarity: bool = False,
    epsilon: float = 1.0,
    weights=None,
) -> np.ndarray:
    """Image of warped events, each deposited through a truncated Gaussian."""
    splat = splat_events(slice_, model, epsilon)
    return splat.image(event_values(slice_, use_polarity, weights))


def variance_loss(iwe) -> float:
    """Pixel variance of the image (population form)."""
    iwe = np.asarray(iwe, dtype=float)
    return float(np.mean((iwe - iwe.mean()) ** 2))


def gradient_magnitude_loss(iwe) -> float:
    """Mean squared gradient magnitude, central differences with replicated borders."""
    iwe = np.asarray(iwe, dtype=float)
    if iwe.ndim != 2 or min(iwe.shape) < 3:
        raise ValueError("gradient magnitude needs an image of at least 3x3 pixels")
    p = np.pad(iwe, 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return float(np.mean(gx * gx + gy * gy))


def average_timestamp_image(splat: Splat, t, weights=None):
    """Per-pixel kernel-weighted mean of event timestamps, and the occupancy mask."""
    w = None if weights is None else np.asarray(weights, dtype=float)
    mass = splat.image(w)
    tsum = splat.image(np.asarray(t, dtype=float) if w is None else w * np.asarray(t, dtype=float))
    occupied = mass > MASS_THRESHOLD
    avg = np.zeros_like(mass)
    avg[occupied] = tsum[occupied] / mass[occupied]
    return avg, occupied


def average_timestamp_loss(slice_: EventSlice, model: WarpModel, epsilon: float = 1.0) -> float:
    """Mean over occupied pixels of the squared average timestamp (to be minimized)."""
    splat = splat_events(slice_, model, epsilon)
    return _avgts_from_splat(splat, slice_.t)


def _avgts_from_splat(splat: Splat, t, weights=None) -> float:
    avg, occupied = average_timestamp_image(splat, t, weights)
    if not occupied.any():
        return 0.0
    return float(np.mean(avg[occupied] ** 2))
