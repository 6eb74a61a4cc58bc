"""Per-frame occupancy labels from a batch-reconstructed scene.

Per frame: slice the scene into a LiDAR-sized sweep, put densified dynamic
objects back at their current box poses, voxelize, and ray-cast from the
camera origins to split FREE, OCCUPIED and UNOBSERVED.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .dynamic import aggregate_track, box_to_world, group_tracks, observations_from_cloud
from .errors import FrameMismatch
from .geom import CameraFrame, Label, PointCloud
from .rng import sample_without_replacement
from .voxel import State, VoxelGrid, raycast_visibility, voxelize

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FrameSweep:
    frame_id: int
    camera_origins: np.ndarray
    points: PointCloud

    @property
    def empty(self) -> bool:
        return len(self.points) == 0


def in_range(points: np.ndarray, center, range_m: float, shape: str = "sphere") -> np.ndarray:
    rel = np.asarray(points, dtype=np.float64) - np.asarray(center, dtype=np.float64)
    if shape == "sphere":
        return np.einsum("ij,ij->i", rel, rel) <= range_m * range_m
    if shape == "box":
        # xy square, unbounded in z
        return np.all(np.abs(rel[:, :2]) <= range_m, axis=1)
    raise ValueError(f"unknown range shape {shape!r}")


def divide_frame(
    scene: PointCloud,
    cam: CameraFrame,
    range_m: float,
    target_count: int,
    seed: int,
    shape: str = "sphere",
) -> FrameSweep:
    """Points within ``range_m`` of the camera, uniformly thinned to ``target_count``.

    The draw uses the counter-based stream ``(seed, frame_id)``.
    """
    if not range_m > 0 or target_count < 1:
        raise ValueError("range_m must be > 0 and target_count >= 1")
    candidates = np.flatnonzero(in_range(scene.points, cam.camera_center, range_m, shape))
    pick = sample_without_replacement(len(candidates), target_count, seed, cam.frame_id)
    sweep = FrameSweep(cam.frame_id, cam.camera_center[None, :].copy(), scene.subset(candidates[pick]))
    if sweep.empty:
        log.warning("frame %d: no scene points within %.1f m", cam.frame_id, range_m)
    return sweep


def fuse_frame(static_sweep: FrameSweep, tracks, inflation: float = 1.1) -> PointCloud:
    """Swap raw dynamic points inside each box for that track's canonical cloud."""
    cloud = static_sweep.points
    added = []
    for box, canonical in tracks:
        if box.frame_id != static_sweep.frame_id:
            raise FrameMismatch(
                f"box of track {box.track_id} is for frame {box.frame_id}, "
                f"sweep is frame {static_sweep.frame_id}"
            )
        if cloud.labels is not None and len(cloud):
            dyn = cloud.labels == Label.DYNAMIC
            drop = np.zeros(len(cloud), dtype=bool)
            if dyn.any():
                drop[dyn] = box.contains(cloud.points[dyn], inflation)
            cloud = cloud.subset(~drop)
        n = len(canonical)
        placed = box_to_world(canonical, box)
        added.append(
            PointCloud(placed.points, np.full(n, Label.DYNAMIC, np.uint8), np.full(n, box.track_id))
        )
    if not added:
        return cloud
    return PointCloud.concat([cloud, *added])


def ego_mask(spec, camera_center, lo, hi) -> np.ndarray:
    centers = spec.cell_centers().reshape(*spec.dims, 3, order="C")
    rel = centers - np.asarray(camera_center)
    return np.all((rel >= np.asarray(lo)) & (rel <= np.asarray(hi)), axis=-1)


def frame_origins(cam: CameraFrame, cfg: PipelineConfig) -> np.ndarray:
    if not cfg.camera_union:
        return cam.camera_center[None, :].copy()
    return cam.pose.apply(np.asarray(cfg.rig_offsets_m, dtype=np.float64).reshape(-1, 3))


def canonical_tracks(scene: PointCloud, tracks, inflation: float, observations=None) -> dict:
    """track_id -> densified box-frame cloud."""
    if observations is None:
        observations = observations_from_cloud(scene, tracks, inflation)
    by_track = group_tracks(tracks)
    out = {}
    for tid, boxes in by_track.items():
        obs = observations.get(tid, {})
        out[tid] = aggregate_track(obs, boxes, inflation) if obs else PointCloud.empty()
    return out


def static_slice(scene: PointCloud, tracked_ids) -> PointCloud:
    """Scene without SKY points and without points of aggregated tracks."""
    if scene.labels is None:
        return scene
    drop = scene.labels == Label.SKY
    if tracked_ids:
        drop |= (scene.labels == Label.DYNAMIC) & np.isin(scene.track_ids, list(tracked_ids))
    return scene.subset(~drop)


def curate_frame(static: PointCloud, cam: CameraFrame, boxes, canon: dict, cfg: PipelineConfig) -> VoxelGrid:
    sweep = divide_frame(static, cam, cfg.range_m, cfg.target_count, cfg.seed, cfg.range_shape)
    origins = frame_origins(cam, cfg)
    sweep = dataclasses.replace(sweep, camera_origins=origins)
    fused = fuse_frame(sweep, [(b, canon[b.track_id]) for b in boxes], cfg.box_inflation)
    if fused.labels is not None:
        fused = fused.subset(fused.labels != Label.SKY)
    spec = cfg.grid.spec_for(cam.camera_center)
    grid = raycast_visibility(voxelize(fused, spec), origins)
    states = grid.states.copy()
    states[ego_mask(spec, cam.camera_center, cfg.ego_min_m, cfg.ego_max_m)] = State.UNOBSERVED
    return VoxelGrid(spec, states)


def curate_sequence(
    scene: PointCloud, cameras, tracks, cfg: PipelineConfig, observations=None
) -> list[tuple[int, VoxelGrid]]:
    """Tri-state grid for every camera frame, in ascending frame_id.

    ``observations`` maps track_id -> frame_id -> world points of that track
    seen in that frame. Without it, DYNAMIC points are attributed to frames by
    box membership.
    """
    cameras = sorted(cameras, key=lambda c: c.frame_id)
    ids = [c.frame_id for c in cameras]
    if len(set(ids)) != len(ids):
        raise FrameMismatch("duplicate frame ids in camera list")
    tracks = list(tracks)
    known = set(ids)
    stray = sorted({b.frame_id for b in tracks} - known)
    if stray:
        raise FrameMismatch(f"boxes reference frames with no camera: {stray[:5]}")

    canon = canonical_tracks(scene, tracks, cfg.box_inflation, observations)
    static = static_slice(scene, canon.keys())
    boxes_at: dict[int, list] = {}
    for b in tracks:
        boxes_at.setdefault(b.frame_id, []).append(b)

    out = []
    for cam in cameras:
        grid = curate_frame(static, cam, sorted(boxes_at.get(cam.frame_id, []), key=lambda b: b.track_id), canon, cfg)
        log.info(
            "frame %d: %d occupied, %d free, %d unobserved",
            cam.frame_id, grid.count(State.OCCUPIED), grid.count(State.FREE), grid.count(State.UNOBSERVED),
        )
        out.append((cam.frame_id, grid))
    return out
