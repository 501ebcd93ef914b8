import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from eventcmax.warps import (
    WARP_MODELS,
    InPlane4DOF,
    PlanarSE2,
    Rotation3DOF,
    Sim2,
    Translation2DOF,
    WarpDomainError,
    Zoom1DOF,
    det_jacobian_at,
    divergence_at,
    flow_at,
    get_model_class,
    inverse_warp_point,
    rodrigues,
    warp_point,
)

# parameter box and coordinate half-range per model, kept inside the admissible region
RANGES = {
    "zoom1dof": ([-1.0], [0.95], 100.0),
    "trans2dof": ([-20, -20], [20, 20], 100.0),
    "rot3dof": ([-1, -1, -1], [1, 1, 1], 0.5),
    "se2": ([-20, -20, -1], [20, 20, 1], 100.0),
    "inplane4dof": ([-20, -20, -0.5, -0.9], [20, 20, 0.5, 0.9], 100.0),
    "sim2": ([-20, -20, -1, -0.9], [20, 20, 1, 1], 100.0),
}


def random_case(kind, seed):
    rng = np.random.default_rng(seed)
    lo, hi, r = RANGES[kind]
    model = get_model_class(kind).from_vector(rng.uniform(lo, hi))
    x, y = rng.uniform(-r, r, 2)
    return model, x, y, rng.uniform(0, 1), r


def fd_divergence(model, x, y, t, h):
    du = model.flow(x + h, y, t)[0] - model.flow(x - h, y, t)[0]
    dv = model.flow(x, y + h, t)[1] - model.flow(x, y - h, t)[1]
    return (du + dv) / (2 * h)


def fd_det(model, x, y, t, h):
    xp, yp = model.warp(x + h, y, t)
    xm, ym = model.warp(x - h, y, t)
    xq, yq = model.warp(x, y + h, t)
    xn, yn = model.warp(x, y - h, t)
    jac = np.array([[xp - xm, xq - xn], [yp - ym, yq - yn]], dtype=float) / (2 * h)
    return np.linalg.det(jac)


kinds = st.sampled_from(sorted(WARP_MODELS))
seeds = st.integers(0, 2**32 - 1)


# spec examples

def test_zoom_warp_example():
    np.testing.assert_allclose(warp_point(Zoom1DOF(1.0), (10, 20), 0.5), (5, 10))


def test_translation_warp_example():
    np.testing.assert_allclose(warp_point(Translation2DOF(2, 0), (0, 0), 1.0), (-2, 0))


def test_zoom_inverse_example():
    np.testing.assert_allclose(inverse_warp_point(Zoom1DOF(0.5), (5, 10), 1.0), (10, 20))


def test_zoom_inverse_singular():
    with pytest.raises(WarpDomainError):
        inverse_warp_point(Zoom1DOF(1.0), (5, 10), 1.0)


def test_sim2_inadmissible_scale():
    with pytest.raises(WarpDomainError):
        warp_point(Sim2(0, 0, 0, -1.0), (1, 1), 1.0)
    assert not Sim2(0, 0, 0, -1.0).is_admissible()


def test_rotation_behind_camera():
    with pytest.raises(WarpDomainError):
        warp_point(Rotation3DOF(0, 3.0, 0), (0.5, 0.0), 1.0)


@pytest.mark.parametrize(
    "model, x, expected",
    [
        (Zoom1DOF(0.5), (10, 20), (-5, -10)),
        (Translation2DOF(2, 3), (7, -4), (-2, -3)),
        (Zoom1DOF(0.0), (13, 9), (0, 0)),
    ],
)
def test_flow_examples(model, x, expected):
    np.testing.assert_allclose(flow_at(model, x, 0.3), expected)


def test_divergence_examples():
    assert divergence_at(Zoom1DOF(0.5), (3, 4), 0.7) == pytest.approx(-1.0)
    assert divergence_at(Rotation3DOF(1, 0, 0), (0.1, 0.2), 0.0) == pytest.approx(-0.6)
    assert divergence_at(Translation2DOF(5, -1), (3, 4), 0.7) == 0.0


def test_det_jacobian_examples():
    assert det_jacobian_at(Zoom1DOF(0.5), (3, 4), 1.0) == pytest.approx(0.25)
    assert det_jacobian_at(PlanarSE2(3, 4, 0.7), (3, 4), 0.6) == 1.0
    assert det_jacobian_at(Sim2(1, 2, 0.3, 1.0), (5, -7), 1.0) == pytest.approx(0.25)


def test_rodrigues_examples():
    np.testing.assert_array_equal(rodrigues(np.zeros(3)), np.eye(3))
    R = rodrigues(np.array([0, 0, math.pi / 2]))
    np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_rodrigues_is_a_rotation(w):
    R = rodrigues(np.array(w))
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rodrigues_small_angle_continuous():
    w = np.array([1e-9, -2e-9, 3e-9])
    np.testing.assert_allclose(rodrigues(w), np.eye(3) + np.array(
        [[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]]), atol=1e-17)


def test_registry():
    assert set(WARP_MODELS) == {"zoom1dof", "trans2dof", "rot3dof", "se2", "inplane4dof", "sim2"}
    assert get_model_class("se2") is PlanarSE2
    with pytest.raises(ValueError):
        get_model_class("affine")


@pytest.mark.parametrize("kind", sorted(WARP_MODELS))
def test_vector_round_trip(kind):
    cls = get_model_class(kind)
    theta = np.arange(1, cls.dof + 1) * 0.1
    np.testing.assert_array_equal(cls.from_vector(theta).to_vector(), theta)
    np.testing.assert_array_equal(cls.identity().to_vector(), np.zeros(cls.dof))


# properties

@given(kinds, seeds)
def test_reference_time_is_identity(kind, seed):
    model, x, y, _, _ = random_case(kind, seed)
    np.testing.assert_array_equal(model.warp(x, y, 0.0), (x, y))


@given(kinds, seeds)
def test_inverse_round_trip(kind, seed):
    model, x, y, t, r = random_case(kind, seed)
    try:
        xw, yw = model.warp(x, y, t)
        xb, yb = model.inverse_warp(xw, yw, t)
    except WarpDomainError:
        assume(False)
    np.testing.assert_allclose((xb, yb), (x, y), atol=1e-9 * r)


@given(kinds, seeds)
def test_flow_is_time_derivative_at_reference(kind, seed):
    model, x, y, _, r = random_case(kind, seed)
    h = 1e-6
    xp, yp = model.warp(x, y, h)
    xm, ym = model.warp(x, y, -h)
    fd = ((xp - xm) / (2 * h), (yp - ym) / (2 * h))
    np.testing.assert_allclose(model.flow(x, y, 0.0), fd, atol=1e-6 * max(r, 1), rtol=1e-6)


@given(kinds, seeds)
@settings(max_examples=150)
def test_divergence_matches_finite_differences(kind, seed):
    model, x, y, t, r = random_case(kind, seed)
    h = 1e-4 * r
    assert model.divergence(x, y, t) == pytest.approx(fd_divergence(model, x, y, t, h), abs=1e-6)


@given(kinds, seeds)
@settings(max_examples=150)
def test_det_jacobian_matches_finite_differences(kind, seed):
    model, x, y, t, r = random_case(kind, seed)
    try:
        det = model.det_jacobian(x, y, t)
        num = fd_det(model, x, y, t, 1e-5 * r)
    except WarpDomainError:
        assume(False)
    assert det == pytest.approx(num, rel=1e-6)


@given(seeds)
def test_inplane_reduces_to_zoom(seed):
    rng = np.random.default_rng(seed)
    hz = rng.uniform(-1, 0.9)
    x, y = rng.uniform(-100, 100, (2, 20))
    t = rng.uniform(0, 1, 20)
    a, b = InPlane4DOF(0, 0, 0, hz), Zoom1DOF(hz)
    for fn in ("warp", "flow", "divergence", "det_jacobian"):
        np.testing.assert_allclose(getattr(a, fn)(x, y, t), getattr(b, fn)(x, y, t), atol=1e-12)


@given(seeds)
def test_sim2_reduces_to_se2(seed):
    rng = np.random.default_rng(seed)
    vx, vy, wz = rng.uniform(-5, 5, 3)
    x, y = rng.uniform(-100, 100, (2, 20))
    t = rng.uniform(0, 1, 20)
    a, b = Sim2(vx, vy, wz, 0.0), PlanarSE2(vx, vy, wz)
    for fn in ("warp", "flow", "divergence", "det_jacobian"):
        np.testing.assert_allclose(getattr(a, fn)(x, y, t), getattr(b, fn)(x, y, t), atol=1e-12)


def test_vectorized_evaluation_matches_pointwise():
    rng = np.random.default_rng(1)
    for kind in WARP_MODELS:
        model, _, _, _, r = random_case(kind, 7)
        x, y = rng.uniform(-r / 2, r / 2, (2, 5))
        t = rng.uniform(0, 0.5, 5)
        xw, yw = model.warp(x, y, t)
        for k in range(5):
            np.testing.assert_allclose(warp_point(model, (x[k], y[k]), t[k]), (xw[k], yw[k]))
