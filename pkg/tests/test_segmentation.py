import numpy as np
import pytest

from eventcmax.collapse import ObjectiveSpec
from eventcmax.events import CameraModel, normalize_time, to_frame
from eventcmax.segmentation import cluster_penalty, e_step, em_segment
from eventcmax.synth import SceneSpec, generate, merge
from eventcmax.warps import Translation2DOF, Zoom1DOF

CAM = CameraModel(96, 72)
REG = ObjectiveSpec.make("variance", 2.0, 5.0)


@pytest.fixture(scope="module")
def composite():
    a, _ = generate(SceneSpec(n_points=30, n_events=4000, seed=1), Zoom1DOF(0.2), CAM)
    b, _ = generate(SceneSpec(n_points=30, n_events=4000, seed=2), Translation2DOF(8, 0), CAM)
    s, src = merge(a, b)
    return normalize_time(s), src


def test_single_motion_owns_the_weight():
    s, _ = generate(SceneSpec(n_points=30, n_events=4000, noise_std=0.0, seed=6), Zoom1DOF(0.2), CAM)
    res = em_segment(normalize_time(s), ["zoom1dof", "trans2dof"], [Zoom1DOF(0.1), Translation2DOF(5, 0)],
                     5, REG, seed=0, n_samples=30)
    share = res.responsibilities.sum(axis=0) / len(s)
    assert share[0] >= 0.9


def test_composite_stream_is_separated(composite):
    s, src = composite
    res = em_segment(s, ["zoom1dof", "trans2dof"], [Zoom1DOF(0.0), Translation2DOF(0, 0)], 4, REG,
                     seed=0, n_samples=40)
    for j in range(2):
        assert np.mean(res.labels[src == j] == j) >= 0.8
    assert res.params[0].hz == pytest.approx(0.2, rel=0.15)
    assert res.params[1].vx == pytest.approx(8.0, rel=0.15)
    assert res.degenerate == [False, False]
    assert len(res.history) == 4


def test_em_is_deterministic(composite):
    s, _ = composite
    args = (s, ["zoom1dof", "trans2dof"], [[0.1], [4.0, 0.0]], 1, REG)
    a = em_segment(*args, seed=3, n_samples=10)
    b = em_segment(*args, seed=3, n_samples=10)
    np.testing.assert_array_equal(a.responsibilities, b.responsibilities)


def test_responsibilities_are_distributions(composite):
    s, _ = composite
    slices = [to_frame(s, "pixel-centered"), s]
    r = e_step(slices, [Zoom1DOF(0.2), Translation2DOF(8, 0)], np.full((len(s), 2), 0.5), REG)
    assert r.shape == (len(s), 2)
    np.testing.assert_allclose(r.sum(axis=1), 1.0)
    assert np.all(r > 0)


def test_argument_checks(composite):
    s, _ = composite
    with pytest.raises(ValueError):
        em_segment(s, ["zoom1dof"], [[0.0]], 2, REG)
    with pytest.raises(ValueError):
        em_segment(s, ["zoom1dof", "trans2dof"], [[0.0], [0.0, 0.0]], 0, REG)


def test_regularizer_keeps_clusters_from_collapsing():
    dense, _ = generate(SceneSpec(n_points=300, n_events=8000, seed=1), Zoom1DOF(0.2), CAM)
    other, _ = generate(SceneSpec(n_points=30, n_events=4000, seed=2), Translation2DOF(8, 0), CAM)
    s, _ = merge(dense, other)
    s = normalize_time(s)
    kinds, init = ["zoom1dof", "trans2dof"], [Zoom1DOF(0.0), Translation2DOF(0, 0)]
    plain = em_segment(s, kinds, init, 3, ObjectiveSpec.make("variance"), seed=0, n_samples=40)
    reg = em_segment(s, kinds, init, 3, REG, seed=0, n_samples=40)
    pen = [cluster_penalty(s, r.params[0], r.responsibilities[:, 0], REG) for r in (plain, reg)]
    assert pen[1] < pen[0]
    assert plain.params[0].hz > 0.9
    assert reg.params[0].hz < 0.5
