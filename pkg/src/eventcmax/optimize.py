"""Searching warp-parameter space: landscape scans, seeded sampling, adaptive descent."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .collapse import ObjectiveSpec, objective_terms
from .events import EventSlice
from .warps import WarpDomainError, WarpModel, get_model_class

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamBox:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if not np.all(lo < hi):
            raise ValueError("each lower bound must be below its upper bound")
        object.__setattr__(self, "lower", tuple(lo))
        object.__setattr__(self, "upper", tuple(hi))

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def scale(self) -> np.ndarray:
        return self.hi - self.lo

    def clip(self, theta) -> np.ndarray:
        return np.clip(theta, self.lo, self.hi)


DEFAULT_BOXES = {
    "zoom1dof": ((-1.0,), (1.0,)),
    "trans2dof": ((-20.0, -20.0), (20.0, 20.0)),
    "rot3dof": ((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)),
    "se2": ((-20.0, -20.0, -1.0), (20.0, 20.0, 1.0)),
    "inplane4dof": ((-20.0, -20.0, -0.5, -1.0), (20.0, 20.0, 0.5, 1.0)),
    "sim2": ((-20.0, -20.0, -1.0, -0.9), (20.0, 20.0, 1.0, 1.0)),
}


def default_box(kind) -> ParamBox:
    """Search ranges used when none is given (velocities in pixels per slice)."""
    lo, hi = DEFAULT_BOXES[get_model_class(kind).kind]
    return ParamBox(lo, hi)


@dataclass
class EstimationResult:
    best_params: WarpModel
    best_score: float
    trace: list = field(default_factory=list)
    evaluations: int = 0
    failures: int = 0


class LandscapeRow(NamedTuple):
    value: float
    G: float
    R_div: float
    R_def: float
    J: float


def _evaluate(slice_, cls, theta, spec, weights=None, all_penalties=False):
    """Objective terms at ``theta``, or ``None`` where the warp is undefined."""
    try:
        terms = objective_terms(slice_, cls.from_vector(theta), spec, weights, all_penalties)
    except WarpDomainError:
        return None
    if not math.isfinite(terms.J):
        return None
    return terms


def landscape_scan(
    slice_: EventSlice,
    kind,
    spec: ObjectiveSpec,
    axis: int = 0,
    lo: float = -1.0,
    hi: float = 1.0,
    steps: int = 401,
    fixed=None,
) -> list[LandscapeRow]:
    """Evaluate the objective along one parameter axis.

    ``fixed`` gives the remaining parameters (default zeros). Grid points where
    the warp is undefined produce rows of NaN rather than failing.
    """
    cls = get_model_class(kind)
    if steps < 2:
        raise ValueError("a landscape scan needs at least 2 steps")
    if not 0 <= axis < cls.dof:
        raise ValueError(f"axis {axis} out of range for {cls.kind} ({cls.dof} DOF)")
    base = np.zeros(cls.dof) if fixed is None else np.asarray(fixed, dtype=float).reshape(cls.dof).copy()
    rows = []
    for value in np.linspace(lo, hi, steps):
        theta = base.copy()
        theta[axis] = value
        terms = _evaluate(slice_, cls, theta, spec, all_penalties=True)
        if terms is None:
            rows.append(LandscapeRow(float(value), math.nan, math.nan, math.nan, math.nan))
        else:
            rows.append(LandscapeRow(float(value), terms.G, terms.R_div, terms.R_def, terms.J))
    return rows


def sampler_search(
    slice_: EventSlice,
    kind,
    box: ParamBox,
    n_samples: int,
    spec: ObjectiveSpec,
    seed: int = 0,
    weights=None,
    init=None,
) -> EstimationResult:
    """Seeded two-phase random search minimizing ``J``.

    The first half of the budget is drawn uniformly in ``box``; the rest from
    Gaussians (std one tenth of the box width) around the best point so far,
    clipped to the box. An ``init`` point, if given, is evaluated before the
    sampled ones (in addition to the budget).
    """
    cls = get_model_class(kind)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if box.dim != cls.dof:
        raise ValueError(f"box has {box.dim} dimensions, {cls.kind} has {cls.dof}")
    rng = np.random.default_rng(seed)
    n_uniform = math.ceil(n_samples / 2)
    std = box.scale / 10.0
    best_theta, best = None, math.inf
    result = EstimationResult(cls.identity(), math.inf)
    if init is not None:
        theta = init.to_vector() if isinstance(init, WarpModel) else np.asarray(init, dtype=float)
        result.evaluations += 1
        terms = _evaluate(slice_, cls, theta, spec, weights)
        if terms is None:
            result.failures += 1
        else:
            result.trace.append((theta, terms.J))
            best, best_theta = terms.J, theta
    for i in range(n_samples):
        if i < n_uniform or best_theta is None:
            theta = rng.uniform(box.lo, box.hi)
        else:
            theta = box.clip(rng.normal(best_theta, std))
        result.evaluations += 1
        terms = _evaluate(slice_, cls, theta, spec, weights)
        if terms is None:
            result.failures += 1
            continue
        result.trace.append((theta, terms.J))
        if terms.J < best:
            best, best_theta = terms.J, theta
    if best_theta is None:
        raise RuntimeError("every sample failed to evaluate")
    result.best_params = cls.from_vector(best_theta)
    result.best_score = best
    return result


def fd_gradient(f, theta, h) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f`` with per-dimension steps ``h``."""
    theta = np.asarray(theta, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), theta.shape)
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h[i]
        g[i] = (f(theta + e) - f(theta - e)) / (2.0 * h[i])
    return g


def adaptive_descent(
    slice_: EventSlice,
    kind,
    init,
    iters: int,
    spec: ObjectiveSpec,
    step: float = 0.01,
    box: ParamBox | None = None,
    weights=None,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> EstimationResult:
    """Adam on ``J`` with central finite-difference gradients.

    Returns the best parameters seen, which need not be the last iterate.
    """
    cls = get_model_class(kind)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if not step > 0:
        raise ValueError("step must be positive")
    theta = (init.to_vector() if isinstance(init, WarpModel) else np.asarray(init, dtype=float)).copy()
    h = 1e-3 * box.scale if box is not None else np.full(cls.dof, 1e-3)
    result = EstimationResult(cls.from_vector(theta), math.inf)

    def J(th):
        result.evaluations += 1
        terms = _evaluate(slice_, cls, th, spec, weights)
        if terms is None:
            result.failures += 1
            return math.nan
        return terms.J

    current = J(theta)
    if not math.isfinite(current):
        raise ValueError("objective is not finite at the initial parameters")
    result.trace.append((theta.copy(), current))
    best_theta, best = theta.copy(), current
    m = np.zeros(cls.dof)
    v = np.zeros(cls.dof)
    for k in range(1, iters + 1):
        g = fd_gradient(J, theta, h)
        if not np.all(np.isfinite(g)):
            logger.debug("iteration %d: non-finite gradient, step skipped", k)
            continue
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**k)
        vhat = v / (1 - beta2**k)
        proposal = theta - step * mhat / (np.sqrt(vhat) + eps)
        if box is not None:
            proposal = box.clip(proposal)
        value = J(proposal)
        if not math.isfinite(value):
            logger.debug("iteration %d: non-finite objective, step rejected", k)
            continue
        theta, current = proposal, value
        result.trace.append((theta.copy(), current))
        if current < best:
            best_theta, best = theta.copy(), current
    result.best_params = cls.from_vector(best_theta)
    result.best_score = best
    return result
