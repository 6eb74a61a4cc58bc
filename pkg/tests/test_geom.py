import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occlabel.geom import (
    Label,
    PointCloud,
    Pose,
    compose,
    invert,
    nearest_rotation,
    rot_x,
    rot_z,
    transform_points,
)

angles = st.floats(-np.pi, np.pi, allow_nan=False)
coords = st.floats(-100, 100, allow_nan=False)


@st.composite
def poses(draw):
    r = rot_z(draw(angles)) @ rot_x(draw(angles)) @ rot_z(draw(angles))
    return Pose(r, [draw(coords), draw(coords), draw(coords)])


def test_compose_identity():
    p = Pose(rot_z(0.3) @ rot_x(-1.1), [1.0, 2.0, -3.0])
    assert compose(Pose.identity(), p).allclose(p, atol=0)


def test_compose_with_inverse_is_identity():
    p = Pose(rot_z(0.3) @ rot_x(-1.1), [1.0, 2.0, -3.0])
    assert compose(p, invert(p)).allclose(Pose.identity(), atol=1e-9)


def test_compose_quarter_turns():
    q = Pose(rot_z(np.pi / 2), np.zeros(3))
    half = compose(q, q)
    expected = np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(half.rotation, expected, atol=1e-12)


def test_compose_applies_right_operand_first():
    a = Pose(np.eye(3), [1.0, 0.0, 0.0])
    b = Pose(rot_z(np.pi / 2), np.zeros(3))
    # b rotates (1,0,0) to (0,1,0), then a shifts by +x
    np.testing.assert_allclose(compose(a, b).apply([1.0, 0.0, 0.0]), [1.0, 1.0, 0.0], atol=1e-12)


def test_transform_identity_and_translation():
    cloud = PointCloud.labelled([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]], Label.GROUND)
    same = transform_points(Pose.identity(), cloud)
    np.testing.assert_array_equal(same.points, cloud.points)
    moved = transform_points(Pose(np.eye(3), [1.0, 0.0, 0.0]), PointCloud([[0.0, 0.0, 0.0]]))
    np.testing.assert_array_equal(moved.points, [[1.0, 0.0, 0.0]])


def test_transform_rotation_and_labels_carried():
    cloud = PointCloud([[1.0, 0.0, 0.0]], [Label.DYNAMIC], [7])
    out = transform_points(Pose(rot_z(np.pi / 2), np.zeros(3)), cloud)
    np.testing.assert_allclose(out.points, [[0.0, 1.0, 0.0]], atol=1e-12)
    assert out.labels.tolist() == [Label.DYNAMIC]
    assert out.track_ids.tolist() == [7]


@settings(max_examples=50, deadline=None)
@given(poses(), st.lists(st.tuples(coords, coords, coords), min_size=1, max_size=20))
def test_round_trip(p, pts):
    cloud = PointCloud(pts)
    back = transform_points(invert(p), transform_points(p, cloud))
    np.testing.assert_allclose(back.points, cloud.points, atol=1e-9, rtol=0)


@settings(max_examples=50, deadline=None)
@given(poses(), poses(), poses())
def test_compose_associative(a, b, c):
    assert compose(compose(a, b), c).allclose(compose(a, compose(b, c)), atol=1e-9)


def test_pose_rejects_non_rigid():
    with pytest.raises(ValueError):
        Pose(np.diag([1.0, 1.0, 1.1]), np.zeros(3))
    with pytest.raises(ValueError):
        Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    r = rot_z(0.2).copy()
    r[0, 0] += 2e-6
    with pytest.raises(ValueError):
        Pose(r, np.zeros(3))


def test_pose_projects_tiny_drift():
    r = rot_z(0.2).copy()
    r[0, 0] += 1e-8
    p = Pose(r, np.zeros(3))
    np.testing.assert_allclose(p.rotation.T @ p.rotation, np.eye(3), atol=1e-12)


def test_nearest_rotation_of_rotation_is_itself():
    r = rot_z(0.7) @ rot_x(0.2)
    np.testing.assert_allclose(nearest_rotation(r), r, atol=1e-12)


def test_point_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud([[0.0, np.nan, 0.0]])
    with pytest.raises(ValueError):
        PointCloud([[0.0, 0.0, 0.0]], labels=[1, 2])
    with pytest.raises(ValueError):
        Pose(np.eye(3), [np.inf, 0.0, 0.0])


def test_camera_center_is_translation():
    from occlabel.geom import CameraFrame

    p = Pose(rot_z(1.0), [3.0, 4.0, 5.0])
    assert CameraFrame(0, p).camera_center is p.translation
