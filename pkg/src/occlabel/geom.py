"""Rigid transforms and labelled point clouds.

World frame is z-up, metres, float64 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

_ORTHO_REJECT = 1e-6


class Label(IntEnum):
    UNLABELED = 0
    STATIC = 1
    GROUND = 2
    DYNAMIC = 3
    SKY = 4


NO_TRACK = -1


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def orthonormality_error(rot: np.ndarray) -> float:
    """Max of ‖RᵀR − I‖∞ and |det R − 1|."""
    rot = np.asarray(rot, dtype=np.float64)
    return max(float(np.abs(rot.T @ rot - np.eye(3)).max()), abs(float(np.linalg.det(rot)) - 1.0))


def nearest_rotation(mat: np.ndarray) -> np.ndarray:
    """Project a 3x3 matrix onto SO(3) in the Frobenius sense."""
    u, _, vt = np.linalg.svd(np.asarray(mat, dtype=np.float64))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def as_vec3(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite vector {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform x -> rotation @ x + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(rot)):
            raise ValueError("non-finite rotation")
        err = orthonormality_error(rot)
        if err > _ORTHO_REJECT:
            raise ValueError(f"rotation is not orthonormal (error {err:.3g})")
        if err > 1e-12:
            # tiny drift is projected away so the stored matrix stays in SO(3)
            rot = nearest_rotation(rot)
        rot.flags.writeable = False
        t = as_vec3(self.translation).copy()
        t.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, yaw: float, translation) -> Pose:
        return cls(rot_z(yaw), translation)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> Pose:
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def __matmul__(self, other: Pose) -> Pose:
        return compose(self, other)

    def allclose(self, other: Pose, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol, rtol=0)
            and np.allclose(self.translation, other.translation, atol=atol, rtol=0)
        )

    def __repr__(self):
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def compose(a: Pose, b: Pose) -> Pose:
    """Pose that applies ``b`` first, then ``a``."""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(p: Pose) -> Pose:
    return p.inverse()


@dataclass(frozen=True, eq=False)
class CameraFrame:
    """Camera-to-world pose for one frame of a sequence."""

    frame_id: int
    pose: Pose

    @property
    def camera_center(self) -> np.ndarray:
        return self.pose.translation


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N x 3 float64 points with optional per-point labels and track ids.

    ``labels`` holds :class:`Label` codes; ``track_ids`` is ``NO_TRACK``
    except on DYNAMIC points. Both are ``None`` for an unlabelled cloud.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    track_ids: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        labels, tracks = self.labels, self.track_ids
        if labels is None and tracks is not None:
            raise ValueError("track_ids given without labels")
        if labels is not None:
            labels = np.array(labels, dtype=np.uint8).reshape(-1)
            if len(labels) != len(pts):
                raise ValueError(f"{len(labels)} labels for {len(pts)} points")
            if tracks is None:
                tracks = np.full(len(pts), NO_TRACK, dtype=np.int64)
            tracks = np.array(tracks, dtype=np.int64).reshape(-1)
            if len(tracks) != len(pts):
                raise ValueError(f"{len(tracks)} track ids for {len(pts)} points")
            labels.flags.writeable = False
            tracks.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "track_ids", tracks)

    @classmethod
    def empty(cls, labelled: bool = True) -> PointCloud:
        if labelled:
            return cls(np.zeros((0, 3)), np.zeros(0, np.uint8), np.zeros(0, np.int64))
        return cls(np.zeros((0, 3)))

    @classmethod
    def labelled(cls, points, label: Label, track_id: int = NO_TRACK) -> PointCloud:
        n = len(np.asarray(points).reshape(-1, 3))
        return cls(points, np.full(n, int(label), np.uint8), np.full(n, track_id, np.int64))

    def __len__(self):
        return len(self.points)

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def subset(self, index) -> PointCloud:
        if self.labels is None:
            return PointCloud(self.points[index])
        return PointCloud(self.points[index], self.labels[index], self.track_ids[index])

    def with_points(self, points) -> PointCloud:
        return PointCloud(points, self.labels, self.track_ids)

    @staticmethod
    def concat(clouds) -> PointCloud:
        clouds = list(clouds)
        if not clouds:
            return PointCloud.empty()
        pts = np.concatenate([c.points for c in clouds])
        if all(c.labels is None for c in clouds):
            return PointCloud(pts)
        labels, tracks = [], []
        for c in clouds:
            if c.labels is None:
                labels.append(np.zeros(len(c), np.uint8))
                tracks.append(np.full(len(c), NO_TRACK, np.int64))
            else:
                labels.append(c.labels)
                tracks.append(c.track_ids)
        return PointCloud(pts, np.concatenate(labels), np.concatenate(tracks))


def transform_points(pose: Pose, cloud: PointCloud) -> PointCloud:
    """Apply ``pose`` to every point; labels ride along unchanged."""
    return cloud.with_points(pose.apply(cloud.points))
