import math
import struct
import warnings

import numpy as np
import pytest

from occlabel import io
from occlabel.errors import MalformedHeader, NonRigidRotation, ParseError, TruncatedPayload, UnsupportedFormat
from occlabel.geom import NO_TRACK, CameraFrame, Label, PointCloud, Pose, rot_z
from occlabel.dynamic import TrackedBox


def labelled_cloud():
    pts = [[0.1, 0.2, 0.3], [-1.5, 2.25, 1e-7], [1e6, -3.0, 0.0]]
    return PointCloud(pts, [Label.GROUND, Label.DYNAMIC, Label.STATIC], [NO_TRACK, 7, NO_TRACK])


class TestPly:
    def test_binary_round_trip_byte_stable(self, tmp_path):
        cloud = labelled_cloud()
        io.write_ply(cloud, tmp_path / "a.ply")
        back = io.read_ply(tmp_path / "a.ply")
        np.testing.assert_array_equal(back.points, cloud.points)
        np.testing.assert_array_equal(back.labels, cloud.labels)
        np.testing.assert_array_equal(back.track_ids, cloud.track_ids)
        io.write_ply(back, tmp_path / "b.ply")
        assert (tmp_path / "a.ply").read_bytes() == (tmp_path / "b.ply").read_bytes()

    def test_ascii_round_trip(self, tmp_path):
        cloud = labelled_cloud()
        io.write_ply(cloud, tmp_path / "a.ply", binary=False)
        back = io.read_ply(tmp_path / "a.ply")
        np.testing.assert_array_equal(back.points, cloud.points)
        np.testing.assert_array_equal(back.track_ids, cloud.track_ids)

    def test_unlabelled(self, tmp_path):
        io.write_ply(PointCloud([[1.0, 2.0, 3.0]]), tmp_path / "u.ply")
        back = io.read_ply(tmp_path / "u.ply")
        assert back.labels is None

    def test_empty(self, tmp_path):
        io.write_ply(PointCloud.empty(), tmp_path / "e.ply")
        assert len(io.read_ply(tmp_path / "e.ply")) == 0

    def test_ascii_normals_skipped(self, tmp_path):
        text = (
            "ply\nformat ascii 1.0\nelement vertex 2\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property float nx\nproperty float ny\nproperty float nz\nend_header\n"
            "1 2 3 0 0 1\n4 5 6 0 1 0\n"
        )
        (tmp_path / "n.ply").write_text(text)
        with pytest.warns(io.PlyWarning, match="nx"):
            cloud = io.read_ply(tmp_path / "n.ply")
        np.testing.assert_array_equal(cloud.points, [[1, 2, 3], [4, 5, 6]])

    def test_float32_widened(self, tmp_path):
        head = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n"
        (tmp_path / "f.ply").write_bytes(head + struct.pack("<3f", 0.5, 1.5, -2.0))
        cloud = io.read_ply(tmp_path / "f.ply")
        assert cloud.points.dtype == np.float64
        np.testing.assert_array_equal(cloud.points, [[0.5, 1.5, -2.0]])

    def test_truncated_binary(self, tmp_path):
        data = io.ply_bytes(PointCloud(np.zeros((10, 3))))
        (tmp_path / "t.ply").write_bytes(data[: len(data) - 3 * 24])
        with pytest.raises(TruncatedPayload):
            io.read_ply(tmp_path / "t.ply")

    def test_truncated_ascii(self, tmp_path):
        data = io.ply_bytes(PointCloud(np.zeros((10, 3))), binary=False)
        lines = data.decode().splitlines(keepends=True)
        (tmp_path / "t.ply").write_text("".join(lines[:-3]))
        with pytest.raises(TruncatedPayload):
            io.read_ply(tmp_path / "t.ply")

    def test_big_endian_rejected(self, tmp_path):
        (tmp_path / "b.ply").write_bytes(b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n")
        with pytest.raises(UnsupportedFormat):
            io.read_ply(tmp_path / "b.ply")

    def test_malformed(self, tmp_path):
        (tmp_path / "m.ply").write_bytes(b"plx\n")
        with pytest.raises(MalformedHeader):
            io.read_ply(tmp_path / "m.ply")
        (tmp_path / "m.ply").write_bytes(b"ply\nformat ascii 1.0\nelement face 0\nend_header\n")
        with pytest.raises(MalformedHeader), pytest.warns(io.PlyWarning, match="face"):
            io.read_ply(tmp_path / "m.ply")

    def test_bad_ascii_row_names_line(self, tmp_path):
        text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nend_header\n1 2 3\n4 five 6\n"
        (tmp_path / "r.ply").write_text(text)
        with pytest.raises(ParseError, match=r"r\.ply:9:"):
            io.read_ply(tmp_path / "r.ply")


class TestPoses:
    def test_identity_line(self, tmp_path):
        (tmp_path / "p.txt").write_text("# comment\n3 1 2 3 1 0 0 0 1 0 0 0 1\n")
        (frame,) = io.read_poses(tmp_path / "p.txt")
        assert frame.frame_id == 3
        np.testing.assert_array_equal(frame.pose.rotation, np.eye(3))
        np.testing.assert_array_equal(frame.camera_center, [1, 2, 3])

    def test_round_trip(self, tmp_path):
        frames = [CameraFrame(i, Pose(rot_z(0.3 * i), [i, -i, 0.5])) for i in range(4)]
        io.write_poses(frames, tmp_path / "p.txt")
        back = io.read_poses(tmp_path / "p.txt")
        for a, b in zip(frames, back):
            assert a.frame_id == b.frame_id
            assert a.pose.allclose(b.pose, atol=0)

    def test_row_norm_rejected(self, tmp_path):
        (tmp_path / "p.txt").write_text("0 0 0 0 1.2 0 0 0 1 0 0 0 1\n")
        with pytest.raises(NonRigidRotation, match=r"p\.txt:1"):
            io.read_poses(tmp_path / "p.txt")

    def test_small_drift_projected_with_warning(self, tmp_path):
        (tmp_path / "p.txt").write_text("0 0 0 0 1.00001 0 0 0 1 0 0 0 1\n")
        with pytest.warns(io.RotationWarning):
            (frame,) = io.read_poses(tmp_path / "p.txt")
        np.testing.assert_allclose(frame.pose.rotation, np.eye(3), atol=1e-12)

    def test_bad_field_count(self, tmp_path):
        (tmp_path / "p.txt").write_text("0 0 0 0 1 0 0 0 1 0 0 0 1\n1 0 0\n")
        with pytest.raises(ParseError, match=r"p\.txt:2"):
            io.read_poses(tmp_path / "p.txt")

    def test_duplicate_frame(self, tmp_path):
        (tmp_path / "p.txt").write_text("0 0 0 0 1 0 0 0 1 0 0 0 1\n0 1 0 0 1 0 0 0 1 0 0 0 1\n")
        with pytest.raises(ParseError):
            io.read_poses(tmp_path / "p.txt")


class TestTracks:
    def test_yaw_90(self, tmp_path):
        (tmp_path / "t.txt").write_text(f"1 0 5 5 1 4 2 1.5 {math.pi / 2!r}\n")
        (box,) = io.read_tracks(tmp_path / "t.txt")
        np.testing.assert_allclose(box.pose.rotation @ [1, 0, 0], [0, 1, 0], atol=1e-12)
        np.testing.assert_array_equal(box.size, [4, 2, 1.5])

    def test_round_trip(self, tmp_path):
        boxes = [TrackedBox.from_yaw(2, f, [f, 1.0, 0.5], [4.5, 1.9, 1.5], 0.1 * f) for f in range(3)]
        io.write_tracks(boxes, tmp_path / "t.txt")
        back = io.read_tracks(tmp_path / "t.txt")
        for a, b in zip(boxes, back):
            assert (a.track_id, a.frame_id) == (b.track_id, b.frame_id)
            assert a.pose.allclose(b.pose, atol=1e-15)

    def test_bad_size(self, tmp_path):
        (tmp_path / "t.txt").write_text("1 0 0 0 0 4 -2 1.5 0\n")
        with pytest.raises(ParseError, match=r"t\.txt:1"):
            io.read_tracks(tmp_path / "t.txt")


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "x.bin", b"abc")
    io.atomic_write(tmp_path / "x.bin", "def")
    assert (tmp_path / "x.bin").read_bytes() == b"def"
    assert [p.name for p in tmp_path.iterdir()] == ["x.bin"]


def test_no_warning_on_clean_files(tmp_path):
    io.write_ply(labelled_cloud(), tmp_path / "a.ply")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        io.read_ply(tmp_path / "a.ply")
