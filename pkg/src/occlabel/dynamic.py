"""Tracked boxes: pose corrections and canonical-frame aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CountMismatch, DegenerateConfiguration, MissingBoxForFrame
from .geom import Label, PointCloud, Pose, as_vec3

DEFAULT_INFLATION = 1.1
# absolute slack so points on a face survive the world/box round trip
CONTAINS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TrackedBox:
    """Box-to-world pose plus full extents (length, width, height) in metres."""

    track_id: int
    frame_id: int
    pose: Pose
    size: np.ndarray

    def __post_init__(self):
        size = as_vec3(self.size).copy()
        if np.any(size <= 0):
            raise ValueError(f"box size must be positive, got {size}")
        size.flags.writeable = False
        object.__setattr__(self, "size", size)

    @classmethod
    def from_yaw(cls, track_id, frame_id, center, size, yaw) -> TrackedBox:
        return cls(track_id, frame_id, Pose.from_yaw(yaw, center), size)

    @property
    def yaw(self) -> float:
        r = self.pose.rotation
        return float(np.arctan2(r[1, 0], r[0, 0]))

    def contains(self, points, inflation: float = 1.0) -> np.ndarray:
        local = world_to_box_points(points, self)
        return _inside(local, self.size, inflation)


@dataclass(frozen=True, eq=False)
class PoseCorrection:
    delta_rotation: np.ndarray
    delta_translation: np.ndarray

    def __post_init__(self):
        # reuse Pose validation for the rotation
        p = Pose(self.delta_rotation, self.delta_translation)
        object.__setattr__(self, "delta_rotation", p.rotation)
        object.__setattr__(self, "delta_translation", p.translation)

    @classmethod
    def identity(cls) -> PoseCorrection:
        return cls(np.eye(3), np.zeros(3))


def _inside(local: np.ndarray, size: np.ndarray, inflation: float) -> np.ndarray:
    return np.all(np.abs(local) <= inflation * size / 2 + CONTAINS_TOL, axis=1)


def apply_correction(pose: Pose, corr: PoseCorrection) -> Pose:
    """R' = R dR, t' = t + dt."""
    return Pose(pose.rotation @ corr.delta_rotation, pose.translation + corr.delta_translation)


def _points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def kabsch(src: np.ndarray, dst: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Rotation Q and translation s minimising sum ||Q src_i + s - dst_i||^2."""
    if len(src) < 3:
        raise DegenerateConfiguration(f"need >= 3 correspondences, got {len(src)}")
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    a, b = src - mu_s, dst - mu_d
    for pts in (a, b):
        sv = np.linalg.svd(pts, compute_uv=False)
        if sv[0] <= tol or sv[1] <= tol * max(1.0, sv[0]):
            raise DegenerateConfiguration("correspondences are collinear or coincident")
    u, _, vt = np.linalg.svd(a.T @ b)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    q = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return q, mu_d - q @ mu_s


def estimate_correction(observed, canonical_in_box, box_pose: Pose) -> PoseCorrection:
    """Closed-form correction aligning box-frame points to observed world points.

    Solves min sum ||(R dR) p_i + (t + dt) - q_i||^2 by reducing to an
    ordinary rigid fit in the box frame: dR p + R^T dt ~ R^T (q - t).
    """
    q = _points(observed)
    p = _points(canonical_in_box)
    if len(q) != len(p):
        raise CountMismatch(f"{len(p)} canonical points vs {len(q)} observed")
    r, t = box_pose.rotation, box_pose.translation
    y = (q - t) @ r  # rows are R^T (q_i - t)
    dr, s = kabsch(p, y)
    return PoseCorrection(dr, r @ s)


def world_to_box_points(points, box: TrackedBox) -> np.ndarray:
    return (_points(points) - box.pose.translation) @ box.pose.rotation


def world_to_box(points: PointCloud, box: TrackedBox) -> PointCloud:
    return points.with_points(world_to_box_points(points, box))


def box_to_world(points: PointCloud, box: TrackedBox) -> PointCloud:
    return points.with_points(box.pose.apply(points.points))


def aggregate_track(per_frame_points, boxes, inflation: float = DEFAULT_INFLATION) -> PointCloud:
    """Concatenate per-frame observations in each frame's own box frame.

    Points outside the box scaled by ``inflation`` are dropped. Frames are
    visited in ascending frame_id so the output is independent of mapping order.
    """
    parts = []
    track_id = None
    for fid in sorted(per_frame_points):
        if fid not in boxes:
            raise MissingBoxForFrame(f"no box for frame {fid}")
        box = boxes[fid]
        if track_id is None:
            track_id = box.track_id
        elif box.track_id != track_id:
            raise ValueError(f"mixed track ids {track_id} and {box.track_id}")
        local = world_to_box(per_frame_points[fid], box)
        keep = _inside(local.points, box.size, inflation)
        parts.append(local.subset(keep))
    if not parts:
        return PointCloud.empty()
    out = PointCloud.concat(parts)
    if track_id is None:
        return out
    n = len(out)
    return PointCloud(out.points, np.full(n, Label.DYNAMIC, np.uint8), np.full(n, track_id))


def group_tracks(boxes) -> dict[int, dict[int, TrackedBox]]:
    """track_id -> frame_id -> box."""
    out: dict[int, dict[int, TrackedBox]] = {}
    for b in boxes:
        per = out.setdefault(b.track_id, {})
        if b.frame_id in per:
            raise ValueError(f"duplicate box for track {b.track_id} frame {b.frame_id}")
        per[b.frame_id] = b
    return out


def observations_from_cloud(cloud: PointCloud, boxes, inflation: float = DEFAULT_INFLATION):
    """Attribute DYNAMIC points of each track to the frames whose box contains them.

    Fallback used when no per-frame observations are supplied; a point inside
    two frames' boxes is attributed to both.
    """
    out: dict[int, dict[int, PointCloud]] = {}
    if cloud.labels is None:
        return out
    for box in boxes:
        sel = (cloud.labels == Label.DYNAMIC) & (cloud.track_ids == box.track_id)
        if not np.any(sel):
            continue
        cand = cloud.subset(np.flatnonzero(sel))
        inside = box.contains(cand.points, inflation)
        if np.any(inside):
            out.setdefault(box.track_id, {})[box.frame_id] = cand.subset(inside)
    return out

