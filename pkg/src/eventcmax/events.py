"""Event streams: loading, validation, time normalization and coordinate frames.

Events are kept as a structure of arrays (``t``, ``x``, ``y``, ``p``) inside an
immutable :class:`EventSlice`. Every transformation returns a new slice.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PIXEL_RAW = "pixel-raw"
PIXEL_CENTERED = "pixel-centered"
CALIBRATED = "calibrated"
FRAMES = (PIXEL_RAW, PIXEL_CENTERED, CALIBRATED)


class EventFormatError(ValueError):
    """Raised when an event or calibration file cannot be parsed."""


class EmptySliceError(ValueError):
    """Raised when an event file holds no events."""


class FrameMismatchError(ValueError):
    """Raised when events are in the wrong coordinate frame for an operation."""


@dataclass(frozen=True)
class Event:
    """A single event ``(t, x, y, p)``; mostly useful for tests and iteration."""

    t: float
    x: float
    y: float
    p: int

    def __post_init__(self):
        if self.p not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.p}")
        if not all(math.isfinite(v) for v in (self.t, self.x, self.y)):
            raise ValueError("event coordinates must be finite")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics and sensor size (all in pixels)."""

    width: int
    height: int
    fx: float = 1.0
    fy: float = 1.0
    cx: float | None = None
    cy: float | None = None

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("camera width and height must be >= 1")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.cx is None:
            object.__setattr__(self, "cx", (self.width - 1) / 2.0)
        if self.cy is None:
            object.__setattr__(self, "cy", (self.height - 1) / 2.0)

    @property
    def center(self) -> tuple[float, float]:
        return (self.width - 1) / 2.0, (self.height - 1) / 2.0

    def to_pixels(self, x, y, frame: str):
        """Map coordinates expressed in ``frame`` to raw pixel coordinates."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if frame == PIXEL_RAW:
            return x, y
        if frame == PIXEL_CENTERED:
            cx, cy = self.center
            return x + cx, y + cy
        if frame == CALIBRATED:
            return x * self.fx + self.cx, y * self.fy + self.cy
        raise ValueError(f"unknown frame {frame!r}")

    def from_pixels(self, x, y, frame: str):
        """Inverse of :meth:`to_pixels`."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if frame == PIXEL_RAW:
            return x, y
        if frame == PIXEL_CENTERED:
            cx, cy = self.center
            return x - cx, y - cy
        if frame == CALIBRATED:
            return (x - self.cx) / self.fx, (y - self.cy) / self.fy
        raise ValueError(f"unknown frame {frame!r}")


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventSlice:
    """An ordered batch of events with its time bounds and camera.

    Arrays are read-only; use :func:`dataclasses.replace` (or the helpers in
    this module) to derive new slices.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    camera: CameraModel
    t0: float | None = None
    t1: float | None = None
    t_ref: float | None = None
    frame: str = PIXEL_RAW
    normalized: bool = field(default=False)

    def __post_init__(self):
        t = _readonly(self.t, float)
        x = _readonly(self.x, float)
        y = _readonly(self.y, float)
        p = _readonly(self.p, np.int8)
        if not (len(t) == len(x) == len(y) == len(p)):
            raise ValueError("t, x, y, p must have equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("event coordinates must be finite")
        if len(p) and not np.all(np.abs(p) == 1):
            raise ValueError("polarity must be -1 or +1")
        if len(t) > 1 and np.any(np.diff(t) < 0):
            raise ValueError("events must be sorted by timestamp")
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        t0 = self.t0 if self.t0 is not None else (float(t[0]) if len(t) else 0.0)
        t1 = self.t1 if self.t1 is not None else (float(t[-1]) if len(t) else t0)
        t_ref = self.t_ref if self.t_ref is not None else t0
        if t1 < t0:
            raise ValueError("t1 must not precede t0")
        if len(t) and (t[0] < t0 or t[-1] > t1):
            raise ValueError("event timestamps fall outside [t0, t1]")
        if not t0 <= t_ref <= t1:
            raise ValueError("t_ref must lie in [t0, t1]")
        for name, value in (("t", t), ("x", x), ("y", y), ("p", p)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "t0", float(t0))
        object.__setattr__(self, "t1", float(t1))
        object.__setattr__(self, "t_ref", float(t_ref))

    def __len__(self):
        return len(self.t)

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def events(self):
        """Iterate over the slice as :class:`Event` objects."""
        for t, x, y, p in zip(self.t, self.x, self.y, self.p):
            yield Event(float(t), float(x), float(y), int(p))

    def relative_time(self) -> np.ndarray:
        """Normalized time measured from the reference time.

        Requires a normalized slice; this is the time argument every warp uses.
        """
        if not self.normalized:
            raise ValueError("slice must be time-normalized first (normalize_time)")
        return self.t - self.t_ref

    def subset(self, mask) -> "EventSlice":
        mask = np.asarray(mask)
        return dataclasses.replace(
            self, t=self.t[mask], x=self.x[mask], y=self.y[mask], p=self.p[mask]
        )


def from_arrays(t, x, y, p, camera: CameraModel, **kwargs) -> EventSlice:
    """Build a slice from unsorted arrays; a stable sort by ``t`` is applied."""
    t = np.asarray(t, dtype=float)
    order = np.argsort(t, kind="stable")
    p = np.asarray(p)
    p = np.where(p > 0, 1, -1)
    return EventSlice(
        t=t[order],
        x=np.asarray(x, dtype=float)[order],
        y=np.asarray(y, dtype=float)[order],
        p=p[order],
        camera=camera,
        **kwargs,
    )


def load_events(path, camera: CameraModel | None = None, format: str = "txt") -> EventSlice:
    """Read a whitespace-separated ``t x y p`` text file.

    Polarity may be given as 0/1 or -1/+1 (0 is read as -1). A fifth column,
    when present (cluster labels written by ``segment``), is ignored.
    Without a ``camera`` the sensor size is inferred from the coordinates.
    """
    if format != "txt":
        raise ValueError(f"unsupported event format {format!r}")
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) not in (4, 5):
                raise EventFormatError(
                    f"{path}:{lineno}: expected 't x y p', got {len(parts)} fields"
                )
            try:
                t, x, y = float(parts[0]), float(parts[1]), float(parts[2])
                p = float(parts[3])
            except ValueError as exc:
                raise EventFormatError(f"{path}:{lineno}: {exc}") from None
            if p not in (0.0, 1.0, -1.0):
                raise EventFormatError(f"{path}:{lineno}: bad polarity {parts[3]!r}")
            if not all(math.isfinite(v) for v in (t, x, y)):
                raise EventFormatError(f"{path}:{lineno}: non-finite value")
            rows.append((t, x, y, p))
    if not rows:
        raise EmptySliceError(f"{path}: no events")
    a = np.array(rows, dtype=float)
    if camera is None:
        camera = CameraModel(
            width=int(np.floor(a[:, 1].max())) + 1, height=int(np.floor(a[:, 2].max())) + 1
        )
    s = from_arrays(a[:, 0], a[:, 1], a[:, 2], a[:, 3], camera)
    return dataclasses.replace(s, t0=float(s.t[0]), t1=float(s.t[-1]), t_ref=float(s.t[0]))


def save_events(slice_: EventSlice, path, labels=None) -> None:
    """Write events as ``t x y p`` text with 17 significant digits (lossless)."""
    with open(path, "w") as fh:
        for k in range(len(slice_)):
            line = f"{slice_.t[k]:.17g} {slice_.x[k]:.17g} {slice_.y[k]:.17g} {int(slice_.p[k])}"
            if labels is not None:
                line += f" {int(labels[k])}"
            fh.write(line + "\n")


def load_calibration(path) -> CameraModel:
    """Read a one-line ``width height fx fy cx cy`` calibration file."""
    text = Path(path).read_text().split()
    if len(text) != 6:
        raise EventFormatError(f"{path}: expected 'width height fx fy cx cy'")
    try:
        w, h, fx, fy, cx, cy = (float(v) for v in text)
    except ValueError as exc:
        raise EventFormatError(f"{path}: {exc}") from None
    return CameraModel(int(w), int(h), fx, fy, cx, cy)


def save_calibration(camera: CameraModel, path) -> None:
    Path(path).write_text(
        f"{camera.width} {camera.height} {camera.fx!r} {camera.fy!r} {camera.cx!r} {camera.cy!r}\n"
    )


def normalize_time(slice_: EventSlice) -> EventSlice:
    """Map timestamps affinely from ``[t0, t1]`` onto ``[0, 1]``.

    A degenerate span maps everything to 0. Already-normalized slices are
    returned unchanged.
    """
    if slice_.normalized:
        return slice_
    span = slice_.t1 - slice_.t0
    if span > 0:
        t = np.clip((slice_.t - slice_.t0) / span, 0.0, 1.0)
        t_ref = (slice_.t_ref - slice_.t0) / span
    else:
        t = np.zeros_like(slice_.t)
        t_ref = 0.0
    return dataclasses.replace(slice_, t=t, t0=0.0, t1=1.0, t_ref=t_ref, normalized=True)


def center_coordinates(slice_: EventSlice) -> EventSlice:
    """Shift pixel coordinates so the image center is the origin."""
    _require_frame(slice_, PIXEL_RAW)
    x, y = slice_.camera.from_pixels(slice_.x, slice_.y, PIXEL_CENTERED)
    return dataclasses.replace(slice_, x=x, y=y, frame=PIXEL_CENTERED)


def calibrate_coordinates(slice_: EventSlice) -> EventSlice:
    """Convert pixel coordinates to calibrated (normalized image plane) ones."""
    _require_frame(slice_, PIXEL_RAW)
    x, y = slice_.camera.from_pixels(slice_.x, slice_.y, CALIBRATED)
    return dataclasses.replace(slice_, x=x, y=y, frame=CALIBRATED)


def to_frame(slice_: EventSlice, frame: str) -> EventSlice:
    """Bring a slice (in any frame) into ``frame``."""
    if slice_.frame == frame:
        return slice_
    x, y = slice_.camera.to_pixels(slice_.x, slice_.y, slice_.frame)
    x, y = slice_.camera.from_pixels(x, y, frame)
    return dataclasses.replace(slice_, x=x, y=y, frame=frame)


def _require_frame(slice_: EventSlice, frame: str) -> None:
    if slice_.frame != frame:
        raise FrameMismatchError(f"expected frame {frame!r}, slice is in {slice_.frame!r}")
