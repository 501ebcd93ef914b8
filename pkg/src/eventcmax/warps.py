"""Parametric event warps with analytic flow, divergence and Jacobian determinant.

Every model maps an event at position ``x`` and normalized time ``t`` (measured
from the reference time) to its position at the reference time. All methods
are vectorized: ``x`` and ``y`` may be arrays, ``t`` a scalar or an array that
broadcasts against them.

Parameter vectors are ordered as follows:

==============  =====================  ===============
kind            parameters             frame
==============  =====================  ===============
zoom1dof        hz                     pixel-centered
trans2dof       vx, vy                 pixel-centered
rot3dof         w1, w2, w3             calibrated
se2             vx, vy, wz             pixel-centered
inplane4dof     vx, vy, phi, hz        pixel-centered
sim2            vx, vy, wz, s          pixel-centered
==============  =====================  ===============
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .events import CALIBRATED, PIXEL_CENTERED, PIXEL_RAW


class WarpDomainError(ValueError):
    """Raised when a warp is evaluated where it is undefined."""


def rodrigues(w) -> np.ndarray:
    """Rotation matrix ``exp(hat(w))`` for exponential coordinates ``w``.

    ``w`` may have shape ``(3,)`` or ``(N, 3)``; the output is ``(3, 3)`` or
    ``(N, 3, 3)``. Below 1e-8 rad the first-order series ``I + hat(w)`` is
    used.
    """
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w = np.atleast_2d(w)
    theta = np.linalg.norm(w, axis=1)
    K = hat(w)
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.0, (1.0 - np.cos(safe)) / safe**2)
    R = np.eye(3) + a[:, None, None] * K + b[:, None, None] * (K @ K)
    return R[0] if single else R


def hat(w) -> np.ndarray:
    """Cross-product matrix of ``w`` (shape ``(3,)`` or ``(N, 3)``)."""
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w = np.atleast_2d(w)
    K = np.zeros((len(w), 3, 3))
    K[:, 0, 1], K[:, 0, 2] = -w[:, 2], w[:, 1]
    K[:, 1, 0], K[:, 1, 2] = w[:, 2], -w[:, 0]
    K[:, 2, 0], K[:, 2, 1] = -w[:, 1], w[:, 0]
    return K[0] if single else K


def _rot2(angle, x, y):
    c, s = np.cos(angle), np.sin(angle)
    return c * x - s * y, s * x + c * y


class WarpModel:
    """Base class. Subclasses are frozen dataclasses holding the parameters."""

    kind: ClassVar[str]
    dof: ClassVar[int]
    param_names: ClassVar[tuple[str, ...]]
    frames: ClassVar[tuple[str, ...]] = (PIXEL_CENTERED,)

    @property
    def frame(self) -> str:
        """Preferred coordinate frame of the model."""
        return self.frames[0]

    def to_vector(self) -> np.ndarray:
        raise NotImplementedError

    @classmethod
    def from_vector(cls, theta) -> "WarpModel":
        raise NotImplementedError

    @classmethod
    def identity(cls) -> "WarpModel":
        return cls.from_vector(np.zeros(cls.dof))

    def is_admissible(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))

    def warp(self, x, y, t):
        raise NotImplementedError

    def inverse_warp(self, x, y, t):
        raise NotImplementedError

    def flow(self, x, y, t):
        raise NotImplementedError

    def divergence(self, x, y, t):
        raise NotImplementedError

    def det_jacobian(self, x, y, t):
        raise NotImplementedError

    def __repr__(self):
        vals = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.param_names, self.to_vector()))
        return f"{type(self).__name__}({vals})"


def _bcast(x, y, t, value):
    return np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(x, y, t).shape).copy()


@dataclass(frozen=True, repr=False)
class Zoom1DOF(WarpModel):
    """Zoom in/out about the image center, ``x' = (1 - t hz) x``."""

    hz: float = 0.0

    kind: ClassVar[str] = "zoom1dof"
    dof: ClassVar[int] = 1
    param_names: ClassVar[tuple[str, ...]] = ("hz",)

    def to_vector(self):
        return np.array([self.hz], dtype=float)

    @classmethod
    def from_vector(cls, theta):
        (hz,) = np.asarray(theta, dtype=float).reshape(1)
        return cls(float(hz))

    def is_admissible(self):
        return super().is_admissible() and self.hz < 1.0

    def warp(self, x, y, t):
        s = 1.0 - np.asarray(t) * self.hz
        return s * x, s * y

    def inverse_warp(self, x, y, t):
        s = 1.0 - np.asarray(t) * self.hz
        if np.any(s == 0):
            raise WarpDomainError("zoom scale factor is zero")
        return x / s, y / s

    def flow(self, x, y, t):
        return _bcast(x, y, t, -self.hz * np.asarray(x)), _bcast(x, y, t, -self.hz * np.asarray(y))

    def divergence(self, x, y, t):
        return _bcast(x, y, t, -2.0 * self.hz)

    def det_jacobian(self, x, y, t):
        return _bcast(x, y, t, (1.0 - np.asarray(t) * self.hz) ** 2)


@dataclass(frozen=True, repr=False)
class Translation2DOF(WarpModel):
    """Constant image velocity ``v``; the warp removes it, ``x' = x - t v``."""

    vx: float = 0.0
    vy: float = 0.0

    kind: ClassVar[str] = "trans2dof"
    dof: ClassVar[int] = 2
    param_names: ClassVar[tuple[str, ...]] = ("vx", "vy")
    frames: ClassVar[tuple[str, ...]] = (PIXEL_CENTERED, PIXEL_RAW)

    def to_vector(self):
        return np.array([self.vx, self.vy], dtype=float)

    @classmethod
    def from_vector(cls, theta):
        vx, vy = np.asarray(theta, dtype=float).reshape(2)
        return cls(float(vx), float(vy))

    def warp(self, x, y, t):
        t = np.asarray(t)
        return x - t * self.vx, y - t * self.vy

    def inverse_warp(self, x, y, t):
        t = np.asarray(t)
        return x + t * self.vx, y + t * self.vy

    def flow(self, x, y, t):
        return _bcast(x, y, t, -self.vx), _bcast(x, y, t, -self.vy)

    def divergence(self, x, y, t):
        return _bcast(x, y, t, 0.0)

    def det_jacobian(self, x, y, t):
        return _bcast(x, y, t, 1.0)


@dataclass(frozen=True, repr=False)
class Rotation3DOF(WarpModel):
    """Pure camera rotation with angular velocity ``w`` (rad per unit time).

    Works on calibrated coordinates: ``x'^h ~ R(t w) x^h``.
    """

    w1: float = 0.0
    w2: float = 0.0
    w3: float = 0.0

    kind: ClassVar[str] = "rot3dof"
    dof: ClassVar[int] = 3
    param_names: ClassVar[tuple[str, ...]] = ("w1", "w2", "w3")
    frames: ClassVar[tuple[str, ...]] = (CALIBRATED,)

    def to_vector(self):
        return np.array([self.w1, self.w2, self.w3], dtype=float)

    @classmethod
    def from_vector(cls, theta):
        w1, w2, w3 = np.asarray(theta, dtype=float).reshape(3)
        return cls(float(w1), float(w2), float(w3))

    def _rotate(self, x, y, t, sign):
        x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(t, float))
        shape = x.shape
        tt = t.reshape(-1)
        R = rodrigues(sign * tt[:, None] * self.to_vector()[None, :])
        P = np.stack([x.reshape(-1), y.reshape(-1), np.ones(tt.size)], axis=1)
        Q = np.einsum("nij,nj->ni", R, P)
        if np.any(Q[:, 2] <= 0):
            raise WarpDomainError("rotation maps a point behind the camera")
        return (Q[:, 0] / Q[:, 2]).reshape(shape), (Q[:, 1] / Q[:, 2]).reshape(shape)

    def warp(self, x, y, t):
        return self._rotate(x, y, t, 1.0)

    def inverse_warp(self, x, y, t):
        return self._rotate(x, y, t, -1.0)

    def flow(self, x, y, t):
        # instantaneous rotational flow B(x) w at the event position
        w1, w2, w3 = self.w1, self.w2, self.w3
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        u = w2 * (1.0 + x * x) - w1 * x * y - w3 * y
        v = -w1 * (1.0 + y * y) + w2 * x * y + w3 * x
        return _bcast(x, y, t, u), _bcast(x, y, t, v)

    def divergence(self, x, y, t):
        return _bcast(x, y, t, 3.0 * (np.asarray(x) * self.w2 - np.asarray(y) * self.w1))

    def det_jacobian(self, x, y, t):
        x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(t, float))
        R = rodrigues(t.reshape(-1)[:, None] * self.to_vector()[None, :])
        z = R[:, 2, 0] * x.reshape(-1) + R[:, 2, 1] * y.reshape(-1) + R[:, 2, 2]
        return (z**-3.0).reshape(x.shape)


@dataclass(frozen=True, repr=False)
class PlanarSE2(WarpModel):
    """Isometry of the image plane: ``x' = R(-t wz) (x - t v)``."""

    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0

    kind: ClassVar[str] = "se2"
    dof: ClassVar[int] = 3
    param_names: ClassVar[tuple[str, ...]] = ("vx", "vy", "wz")

    def to_vector(self):
        return np.array([self.vx, self.vy, self.wz], dtype=float)

    @classmethod
    def from_vector(cls, theta):
        vx, vy, wz = np.asarray(theta, dtype=float).reshape(3)
        return cls(float(vx), float(vy), float(wz))

    def warp(self, x, y, t):
        t = np.asarray(t)
        return _rot2(-t * self.wz, x - t * self.vx, y - t * self.vy)

    def inverse_warp(self, x, y, t):
        t = np.asarray(t)
        u, v = _rot2(t * self.wz, x, y)
        return u + t * self.vx, v + t * self.vy

    def flow(self, x, y, t):
        t = np.asarray(t)
        a = -t * self.wz
        dx, dy = x - t * self.vx, y - t * self.vy
        # d/dt R(-t wz) = -wz R(pi/2 - t wz)
        rx, ry = _rot2(np.pi / 2 + a, dx, dy)
        vx, vy = _rot2(a, self.vx, self.vy)
        return _bcast(x, y, t, -self.wz * rx - vx), _bcast(x, y, t, -self.wz * ry - vy)

    def divergence(self, x, y, t):
        return _bcast(x, y, t, -2.0 * self.wz * np.sin(np.asarray(t) * self.wz))

    def det_jacobian(self, x, y, t):
        return _bcast(x, y, t, 1.0)


@dataclass(frozen=True, repr=False)
class InPlane4DOF(WarpModel):
    """In-plane approximation of camera motion with translation, rotation and zoom.

    ``x' = x - t (v + (hz + 1) R(phi) x - x)``
    """

    vx: float = 0.0
    vy: float = 0.0
    phi: float = 0.0
    hz: float = 0.0

    kind: ClassVar[str] = "inplane4dof"
    dof: ClassVar[int] = 4
    param_names: ClassVar[tuple[str, ...]] = ("vx", "vy", "phi", "hz")

    def to_vector(self):
        return np.array([self.vx, self.vy, self.phi, self.hz], dtype=float)

    @classmethod
    def from_vector(cls, theta):
        vx, vy, phi, hz = np.asarray(theta, dtype=float).reshape(4)
        return cls(float(vx), float(vy), float(phi), float(hz))

    def warp(self, x, y, t):
        t = np.asarray(t)
        rx, ry = _rot2(self.phi, x, y)
        k = self.hz + 1.0
        return x - t * (self.vx + k * rx - x), y - t * (self.vy + k * ry - y)

    def inverse_warp(self, x, y, t):
        # x' + t v = M x with M = (1 + t) I - t (hz + 1) R(phi)
        t = np.asarray(t, dtype=float)
        k = self.hz + 1.0
        c, s = np.cos(self.phi), np.sin(self.phi)
        a = (1.0 + t) - t * k * c
        b = t * k * s
        det = a * a + b * b
        if np.any(det == 0):
            raise WarpDomainError("4-DOF warp is singular")
        px, py = x + t * self.vx, y + t * self.vy
        # M = [[a, b], [-b, a]]
        return (a * px - b * py) / det, (b * px + a * py) / det

    def flow(self, x, y, t):
        rx, ry = _rot2(self.phi, x, y)
        k = self.hz + 1.0
        return (
            _bcast(x, y, t, -(self.vx + k * rx - np.asarray(x))),
            _bcast(x, y, t, -(self.vy + k * ry - np.asarray(y))),
        )

    def divergence(self, x, y, t):
        return _bcast(x, y, t, 2.0 - 2.0 * (self.hz + 1.0) * np.cos(self.phi))

    def det_jacobian(self, x, y, t):
        t = np.asarray(t, dtype=float)
        k = self.hz + 1.0
        d = (1.0 + t) ** 2 - 2.0 * (1.0 + t) * t * k * np.cos(self.phi) + t**2 * k**2
        return _bcast(x, y, t, d)


@dataclass(frozen=True, repr=False)
class Sim2(WarpModel):
    """Similarity transform: ``x' = R(-t wz) (x - t v) / (1 + t s)``."""

    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    s: float = 0.0

    kind: ClassVar[str] = "sim2"
    dof: ClassVar[int] = 4
    param_names: ClassVar[tuple[str, ...]] = ("vx", "vy", "wz", "s")

    def to_vector(self):
        return np.array([self.vx, self.vy, self.wz, self.s], dtype=float)

    @classmethod
    def from_vector(cls, theta):
        vx, vy, wz, s = np.asarray(theta, dtype=float).reshape(4)
        return cls(float(vx), float(vy), float(wz), float(s))

    def is_admissible(self):
        return super().is_admissible() and self.s > -1.0

    def _beta(self, t):
        beta = 1.0 + np.asarray(t, dtype=float) * self.s
        if np.any(beta <= 0):
            raise WarpDomainError("similarity scale 1 + t*s must be positive")
        return beta

    def warp(self, x, y, t):
        t = np.asarray(t)
        beta = self._beta(t)
        u, v = _rot2(-t * self.wz, x - t * self.vx, y - t * self.vy)
        return u / beta, v / beta

    def inverse_warp(self, x, y, t):
        t = np.asarray(t)
        beta = self._beta(t)
        u, v = _rot2(t * self.wz, beta * x, beta * y)
        return u + t * self.vx, v + t * self.vy

    def flow(self, x, y, t):
        t = np.asarray(t)
        beta = self._beta(t)
        dinv = -self.s / beta**2
        a = -t * self.wz
        dx, dy = x - t * self.vx, y - t * self.vy
        ux, uy = _rot2(a, dx, dy)
        rx, ry = _rot2(np.pi / 2 + a, dx, dy)
        vx, vy = _rot2(a, self.vx, self.vy)
        fx = dinv * ux - self.wz * rx / beta - vx / beta
        fy = dinv * uy - self.wz * ry / beta - vy / beta
        return _bcast(x, y, t, fx), _bcast(x, y, t, fy)

    def divergence(self, x, y, t):
        t = np.asarray(t)
        beta = self._beta(t)
        dinv = -self.s / beta**2
        d = dinv * 2.0 * np.cos(t * self.wz) + self.wz * 2.0 * np.sin(-t * self.wz) / beta
        return _bcast(x, y, t, d)

    def det_jacobian(self, x, y, t):
        return _bcast(x, y, t, self._beta(t) ** -2.0)


WARP_MODELS: dict[str, type[WarpModel]] = {
    cls.kind: cls for cls in (Zoom1DOF, Translation2DOF, Rotation3DOF, PlanarSE2, InPlane4DOF, Sim2)
}


def get_model_class(kind) -> type[WarpModel]:
    """Resolve a model kind name (or class) to its class."""
    if isinstance(kind, type) and issubclass(kind, WarpModel):
        return kind
    try:
        return WARP_MODELS[kind]
    except KeyError:
        raise ValueError(f"unknown warp {kind!r}; choose from {sorted(WARP_MODELS)}") from None


def _xy(point):
    p = np.asarray(point, dtype=float)
    return p[..., 0], p[..., 1]


def warp_point(model: WarpModel, x, t) -> np.ndarray:
    """Warp point(s) ``x`` (shape ``(2,)`` or ``(N, 2)``) from time ``t`` to the reference."""
    return np.stack(model.warp(*_xy(x), t), axis=-1)


def inverse_warp_point(model: WarpModel, x_ref, t) -> np.ndarray:
    """Position at time ``t`` of the point that warps to ``x_ref``."""
    return np.stack(model.inverse_warp(*_xy(x_ref), t), axis=-1)


def flow_at(model: WarpModel, x, t) -> np.ndarray:
    return np.stack(model.flow(*_xy(x), t), axis=-1)


def divergence_at(model: WarpModel, x, t):
    return model.divergence(*_xy(x), t)


def det_jacobian_at(model: WarpModel, x, t):
    return model.det_jacobian(*_xy(x), t)
