import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from depthkit.geometry import (
    CameraIntrinsics,
    InvalidInputError,
    Pose,
    Quaternion,
    child_to_parent,
    global_to_camera,
    parent_to_child,
    project_point,
    project_points,
    quaternion_to_rotation,
    random_pose,
    rotation_to_quaternion,
)

from .conftest import BASELINE, FOCAL

H2 = math.sqrt(2) / 2

components = st.floats(-10, 10, allow_nan=False)
quats = st.tuples(components, components, components, components).filter(
    lambda q: sum(c * c for c in q) > 1e-3
)
coords = st.floats(-100, 100, allow_nan=False)
points = st.tuples(coords, coords, coords)


def test_quaternion_normalizes():
    q = Quaternion(2, 0, 0, 0)
    assert (q.w, q.x, q.y, q.z) == (1, 0, 0, 0)


@pytest.mark.parametrize("bad", [(0, 0, 0, 0), (math.nan, 0, 0, 1), (math.inf, 0, 0, 0)])
def test_quaternion_rejects(bad):
    with pytest.raises(InvalidInputError):
        Quaternion(*bad)


def test_identity_rotation():
    np.testing.assert_array_equal(quaternion_to_rotation(Quaternion(1, 0, 0, 0)), np.eye(3))


def test_half_turn_about_x():
    np.testing.assert_array_equal(quaternion_to_rotation(Quaternion(0, 1, 0, 0)), np.diag([1.0, -1.0, -1.0]))


def test_quarter_turn_about_z():
    # hand-evaluated: w = z = sqrt(2)/2
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    np.testing.assert_allclose(quaternion_to_rotation(Quaternion(H2, 0, 0, H2)), expected, atol=1e-15)


@given(quats)
def test_rotation_is_orthonormal(q):
    R = quaternion_to_rotation(Quaternion(*q))
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
    assert abs(np.linalg.det(R) - 1) < 1e-9


@given(quats)
def test_matches_scipy_rotation(q):
    quat = Quaternion(*q)
    oracle = Rotation.from_quat([quat.x, quat.y, quat.z, quat.w]).as_matrix()
    np.testing.assert_allclose(quaternion_to_rotation(quat), oracle, atol=1e-12)


@given(quats)
def test_sign_invariance_is_exact(q):
    quat = Quaternion(*q)
    assert np.array_equal(quaternion_to_rotation(quat), quaternion_to_rotation(-quat))


@given(quats)
def test_rotation_to_quaternion_roundtrip(q):
    R = quaternion_to_rotation(Quaternion(*q))
    np.testing.assert_allclose(quaternion_to_rotation(rotation_to_quaternion(R)), R, atol=1e-12)


def test_parent_to_child_examples():
    np.testing.assert_array_equal(parent_to_child(Pose(), [3, 4, 5]), [3, 4, 5])
    np.testing.assert_array_equal(parent_to_child(Pose(translation=(1, 2, 3)), [1, 2, 3]), [0, 0, 0])
    rot_z = Pose(Quaternion(H2, 0, 0, H2), (0, 0, 0))
    np.testing.assert_allclose(parent_to_child(rot_z, [1, 0, 0]), [0, -1, 0], atol=1e-15)


def test_parent_to_child_matches_written_form(rng):
    # B_P = B_R_G * G_P - B_R_G * G_t_B with B_R_G = (G_R_B)^T, evaluated literally
    for _ in range(20):
        pose = random_pose(rng)
        p = rng.normal(size=3) * 20
        R_bg = pose.matrix.T
        expected = R_bg @ p - R_bg @ pose.t
        np.testing.assert_allclose(parent_to_child(pose, p), expected, atol=1e-12)


@settings(max_examples=200)
@given(quats, points, points)
def test_roundtrip(q, t, p):
    pose = Pose(Quaternion(*q), t)
    np.testing.assert_allclose(parent_to_child(pose, child_to_parent(pose, p)), p, atol=1e-9)


@given(quats, points, quats, points, points)
def test_chain_equals_composed_pose(q1, t1, q2, t2, p):
    body, cam = Pose(Quaternion(*q1), t1), Pose(Quaternion(*q2), t2)
    composed = body.compose(cam)
    np.testing.assert_allclose(global_to_camera(body, cam, p), parent_to_child(composed, p), atol=1e-9)


def test_batch_matches_single(rng):
    pose = random_pose(rng)
    pts = rng.normal(size=(50, 3))
    batch = parent_to_child(pose, pts)
    for p, b in zip(pts, batch):
        np.testing.assert_allclose(parent_to_child(pose, p), b, atol=1e-14)


def test_rejects_non_finite_points():
    with pytest.raises(InvalidInputError):
        parent_to_child(Pose(), [0, np.nan, 1])


def test_intrinsics_defaults_and_validation():
    intr = CameraIntrinsics(focal=FOCAL, height=860, width=1656, baseline=BASELINE)
    assert intr.principal_point == (827.5, 429.5)
    assert intr.image_size == (860, 1656)
    for bad in (dict(focal=0), dict(baseline=-1), dict(height=0)):
        kw = dict(focal=FOCAL, height=860, width=1656, baseline=BASELINE) | bad
        with pytest.raises(InvalidInputError):
            CameraIntrinsics(**kw)


def test_project_point_examples(rig):
    assert project_point(rig, [0, 0, 10]) == (828.0, 430.0, 10.0)
    u, v, z = project_point(rig, [1, 0, 10])
    assert u == pytest.approx(828 + 94.5391406, abs=1e-12)
    assert (v, z) == (430.0, 10.0)
    assert project_point(rig, [0, 0, -1]) is None
    assert project_point(rig, [0, 0, 1e-7]) is None


@given(points.filter(lambda p: p[2] > 0.01), st.floats(0.01, 100))
def test_projection_scale_invariance(p, lam):
    intr = CameraIntrinsics(focal=FOCAL, height=100, width=100, baseline=BASELINE)
    u1, v1, z1, _ = project_points(intr, p)
    u2, v2, z2, _ = project_points(intr, np.array(p) * lam)
    np.testing.assert_allclose([u2[0], v2[0]], [u1[0], v1[0]], rtol=1e-9, atol=1e-9)
    assert z2[0] == pytest.approx(lam * z1[0], rel=1e-12)
