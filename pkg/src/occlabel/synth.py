"""Procedural driving scenes with exact ground truth, plus brute-force oracles.

Every surface in a scene is a planar rectangle, so ground-truth occupancy is
an exact rectangle/cube overlap test with no sampling involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamic import TrackedBox
from .errors import InvalidSpec
from .geom import CameraFrame, Label, PointCloud, Pose, rot_y
from .rng import CounterRNG
from .voxel import GridSpec, State, VoxelGrid, compose_states

_GROUND_STREAM = 1
_BUILDING_STREAM = 100
_VEHICLE_STREAM = 10_000


@dataclass(frozen=True, eq=False)
class Rect:
    """Planar rectangle ``center + a*u + b*v`` for a, b in [-1, 1]."""

    center: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def area(self) -> float:
        return 4.0 * float(np.linalg.norm(np.cross(self.u, self.v)))

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.u, self.v)
        return n / np.linalg.norm(n)

    def transformed(self, pose: Pose) -> Rect:
        r = pose.rotation
        return Rect(pose.apply(self.center), r @ self.u, r @ self.v)

    def sample(self, rng: CounterRNG, density: float) -> np.ndarray:
        n = int(round(self.area * density))
        ab = rng.uniform(2 * n, -1.0, 1.0).reshape(n, 2)
        return self.center + ab[:, :1] * self.u + ab[:, 1:] * self.v


def _rect(center, u, v) -> Rect:
    return Rect(np.asarray(center, float), np.asarray(u, float), np.asarray(v, float))


def box_faces(lo, hi, bottom: bool = False) -> list[Rect]:
    """Faces of an axis-aligned box, outward normals; bottom face optional."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    c, h = (lo + hi) / 2, (hi - lo) / 2
    ex, ey, ez = np.diag(h)
    faces = [
        _rect(c + ez, ex, ey),  # top
        _rect(c + ex, ey, ez),  # +x
        _rect(c - ex, ez, ey),  # -x
        _rect(c + ey, ez, ex),  # +y
        _rect(c - ey, ex, ez),  # -y
    ]
    if bottom:
        faces.append(_rect(c - ez, ey, ex))
    return faces


def shell_faces(size) -> list[Rect]:
    """Open-bottom vehicle shell in its own box frame."""
    half = np.asarray(size, float) / 2
    return box_faces(-half, half)


@dataclass(frozen=True)
class GroundProfile:
    """Road height as a function of x only.

    ``flat``: z = 0. ``slope``: z = grade * x. ``piecewise``: slope ``grade``
    up to ``break_x``, then ``grade_after``.
    """

    kind: str = "flat"
    grade: float = 0.0
    break_x: float = 0.0
    grade_after: float = 0.0

    def __post_init__(self):
        if self.kind not in ("flat", "slope", "piecewise"):
            raise InvalidSpec(f"unknown ground profile {self.kind!r}")

    def height(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "flat":
            return np.zeros_like(x)
        if self.kind == "slope":
            return self.grade * x
        return np.where(
            x < self.break_x,
            self.grade * x,
            self.grade * self.break_x + self.grade_after * (x - self.break_x),
        )

    def slope_at(self, x: float) -> float:
        if self.kind == "flat":
            return 0.0
        if self.kind == "slope" or x < self.break_x:
            return self.grade
        return self.grade_after

    def breakpoints(self, xmin: float, xmax: float) -> list[float]:
        xs = [xmin, xmax]
        if self.kind == "piecewise" and xmin < self.break_x < xmax:
            xs.insert(1, self.break_x)
        return xs


@dataclass(frozen=True)
class VehicleSpec:
    start_xy: tuple[float, float] = (15.0, 3.5)
    yaw: float = 0.0
    speed: float = 2.0
    size: tuple[float, float, float] = (4.5, 1.9, 1.5)
    clearance: float = 0.4
    track_id: int = 1


@dataclass(frozen=True)
class SceneSpec:
    ground: GroundProfile = GroundProfile()
    ground_extent: tuple[float, float, float, float] = (-20.0, 60.0, -15.0, 15.0)
    buildings: tuple = ()
    vehicle: VehicleSpec | None = None
    ego_start_xy: tuple[float, float] = (0.0, 0.0)
    ego_speed: float = 5.0
    camera_height: float = 1.8
    rig_offsets: tuple = ((0.0, 0.0, 0.0),)
    frame_count: int = 20
    duration_s: float = 3.8
    density: float = 50.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.frame_count < 1:
            raise InvalidSpec("frame_count must be >= 1")
        if not self.density > 0:
            raise InvalidSpec("density must be > 0")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")
        if self.duration_s < 0:
            raise InvalidSpec("duration_s must be >= 0")
        xmin, xmax, ymin, ymax = self.ground_extent
        if not (xmax > xmin and ymax > ymin):
            raise InvalidSpec("empty ground extent")
        for lo, hi in self.buildings:
            if np.any(np.asarray(hi, float) <= np.asarray(lo, float)):
                raise InvalidSpec(f"degenerate building box {lo} {hi}")
        if self.vehicle is not None and min(self.vehicle.size) <= 0:
            raise InvalidSpec("vehicle size must be positive")

    def frame_time(self, f: int) -> float:
        if self.frame_count == 1:
            return 0.0
        return self.duration_s * f / (self.frame_count - 1)


def street_scene(ground: GroundProfile | None = None, **overrides) -> SceneSpec:
    """Two buildings beside the road and one vehicle overtaking the ego camera.

    Building faces sit off round coordinates so they do not coincide with
    cell boundaries of typical grids.
    """
    kw = dict(
        ground=ground or GroundProfile(),
        buildings=(
            ((8.1, 7.3, -3.0), (20.3, 15.7, 6.1)),
            ((26.7, -14.3, -3.0), (34.9, -6.9, 8.3)),
        ),
        vehicle=VehicleSpec(start_xy=(6.0, 3.5), speed=8.0),
        density=100.0,
    )
    kw.update(overrides)
    return SceneSpec(**kw)


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    spec: SceneSpec
    cloud: PointCloud
    cameras: list
    tracks: list
    static_surfaces: list
    # track_id -> frame_id -> world-frame points seen in that frame
    dynamic_observations: dict = field(default_factory=dict)

    def camera_origins(self, frame: CameraFrame) -> np.ndarray:
        return frame.pose.apply(np.asarray(self.spec.rig_offsets, float).reshape(-1, 3))

    def surfaces_at(self, frame_id: int | None) -> list[Rect]:
        rects = list(self.static_surfaces)
        if frame_id is None:
            return rects
        for box in self.tracks:
            if box.frame_id == frame_id:
                rects.extend(r.transformed(box.pose) for r in shell_faces(box.size))
        return rects


def ground_rects(spec: SceneSpec) -> list[Rect]:
    xmin, xmax, ymin, ymax = spec.ground_extent
    xs = spec.ground.breakpoints(xmin, xmax)
    rects = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        z0, z1 = float(spec.ground.height(x0)), float(spec.ground.height(x1))
        rects.append(
            _rect(
                ((x0 + x1) / 2, (ymin + ymax) / 2, (z0 + z1) / 2),
                ((x1 - x0) / 2, 0.0, (z1 - z0) / 2),
                (0.0, (ymax - ymin) / 2, 0.0),
            )
        )
    return rects


def _noisy(pts: np.ndarray, rng: CounterRNG, sigma: float) -> np.ndarray:
    if sigma == 0.0 or len(pts) == 0:
        return pts
    return pts + rng.normal(pts.size, sigma).reshape(pts.shape)


def _camera_frames(spec: SceneSpec) -> list[CameraFrame]:
    frames = []
    for f in range(spec.frame_count):
        t = spec.frame_time(f)
        x = spec.ego_start_xy[0] + spec.ego_speed * t
        y = spec.ego_start_xy[1]
        z = float(spec.ground.height(x)) + spec.camera_height
        pitch = math.atan(spec.ground.slope_at(x))
        frames.append(CameraFrame(f, Pose(rot_y(-pitch), (x, y, z))))
    return frames


def _vehicle_boxes(spec: SceneSpec) -> list[TrackedBox]:
    veh = spec.vehicle
    if veh is None:
        return []
    boxes = []
    heading = np.array([math.cos(veh.yaw), math.sin(veh.yaw)])
    for f in range(spec.frame_count):
        xy = np.asarray(veh.start_xy, float) + veh.speed * spec.frame_time(f) * heading
        z = float(spec.ground.height(xy[0])) + veh.clearance + veh.size[2] / 2
        boxes.append(TrackedBox.from_yaw(veh.track_id, f, (xy[0], xy[1], z), veh.size, veh.yaw))
    return boxes


def visible_faces(faces, box_pose: Pose, eye) -> list[Rect]:
    """Faces whose outward normal points towards ``eye`` (back-face culling)."""
    eye = np.asarray(eye, float)
    out = []
    for r in faces:
        wr = r.transformed(box_pose)
        if float(np.dot(wr.normal, eye - wr.center)) > 0.0:
            out.append(r)
    return out


def sample_shell(faces, rng: CounterRNG, density: float, size, sigma: float = 0.0) -> np.ndarray:
    """Box-frame samples on ``faces``, jittered then clamped into the box."""
    parts = [r.sample(rng, density) for r in faces]
    pts = np.concatenate(parts) if parts else np.zeros((0, 3))
    pts = _noisy(pts, rng, sigma)
    half = np.asarray(size, float) / 2
    return np.clip(pts, -half, half)


def generate_scene(spec: SceneSpec) -> SyntheticScene:
    cameras = _camera_frames(spec)
    tracks = _vehicle_boxes(spec)

    clouds = []
    grounds = ground_rects(spec)
    rng = CounterRNG(spec.seed, _GROUND_STREAM)
    for r in grounds:
        pts = _noisy(r.sample(rng, spec.density), rng, spec.noise_sigma)
        clouds.append(PointCloud.labelled(pts, Label.GROUND))

    buildings = []
    for i, (lo, hi) in enumerate(spec.buildings):
        rng = CounterRNG(spec.seed, _BUILDING_STREAM + i)
        faces = box_faces(lo, hi)
        buildings.extend(faces)
        pts = np.concatenate([r.sample(rng, spec.density) for r in faces])
        clouds.append(PointCloud.labelled(_noisy(pts, rng, spec.noise_sigma), Label.STATIC))

    observations: dict = {}
    if spec.vehicle is not None:
        faces = shell_faces(spec.vehicle.size)
        for box, cam in zip(tracks, cameras):
            rng = CounterRNG(spec.seed, _VEHICLE_STREAM + box.frame_id)
            seen = visible_faces(faces, box.pose, cam.camera_center)
            local = sample_shell(seen, rng, spec.density, box.size, spec.noise_sigma)
            obs = PointCloud.labelled(box.pose.apply(local), Label.DYNAMIC, box.track_id)
            observations.setdefault(box.track_id, {})[box.frame_id] = obs
            clouds.append(obs)

    return SyntheticScene(
        spec=spec,
        cloud=PointCloud.concat(clouds),
        cameras=cameras,
        tracks=tracks,
        static_surfaces=grounds + buildings,
        dynamic_observations=observations,
    )


def rect_cube_overlap(rect: Rect, centers: np.ndarray, half: float) -> np.ndarray:
    """Separating-axis test of one rectangle against many axis-aligned cubes.

    Closed sets: touching counts as overlap.
    """
    u, v = rect.u, rect.v
    n = np.cross(u, v)
    axes = [np.eye(3)[i] for i in range(3)] + [n]
    for e in np.eye(3):
        axes.append(np.cross(e, u))
        axes.append(np.cross(e, v))
    rel = rect.center - centers
    overlap = np.ones(len(centers), dtype=bool)
    for a in axes:
        if not np.any(a):
            continue
        r_rect = abs(a @ u) + abs(a @ v)
        r_cube = half * np.abs(a).sum()
        overlap &= np.abs(rel @ a) <= r_rect + r_cube
    return overlap


def occupancy_from_surfaces(rects, spec: GridSpec) -> VoxelGrid:
    states = np.zeros(spec.dims, dtype=np.uint8)
    vs, half = spec.voxel_size, spec.voxel_size / 2
    dims = np.asarray(spec.dims)
    for r in rects:
        ext = np.abs(r.u) + np.abs(r.v)
        lo = np.floor((r.center - ext - spec.origin) / vs).astype(np.int64) - 1
        hi = np.floor((r.center + ext - spec.origin) / vs).astype(np.int64) + 1
        lo, hi = np.maximum(lo, 0), np.minimum(hi, dims - 1)
        if np.any(hi < lo):
            continue
        ijk = np.stack(
            np.meshgrid(*(np.arange(a, b + 1) for a, b in zip(lo, hi)), indexing="ij"), axis=-1
        ).reshape(-1, 3)
        hit = rect_cube_overlap(r, spec.cell_centers(ijk), half)
        ijk = ijk[hit]
        states[ijk[:, 0], ijk[:, 1], ijk[:, 2]] = State.OCCUPIED
    return VoxelGrid(spec, states)


def oracle_occupancy(scene: SyntheticScene, spec: GridSpec, frame_id: int | None = None) -> VoxelGrid:
    """Cells whose closed cube meets any scene surface; vehicles placed at ``frame_id``."""
    return occupancy_from_surfaces(scene.surfaces_at(frame_id), spec)


def _walk_sampled(occ, g0, d, t, dims):
    """First-hit walk along one ray from its sampled cells.

    Consecutive samples in cells differing on two or three axes skipped a
    corner; the skipped cells are recovered by stepping axes in the order
    the ray crosses their planes (x first on exact ties).
    """
    cells = np.floor(g0 + t[:, None] * d).astype(np.int64)
    keep = np.ones(len(cells), dtype=bool)
    keep[1:] = np.any(cells[1:] != cells[:-1], axis=1)
    seq = cells[keep]
    multi = np.count_nonzero(seq[1:] != seq[:-1], axis=1) > 1
    if multi.any():
        out = [seq[0]]
        for j in range(len(seq) - 1):
            a, b = seq[j], seq[j + 1]
            if multi[j]:
                axes = np.flatnonzero(a != b)
                planes = np.maximum(a, b)[axes]
                t_cross = (planes - g0[axes]) / d[axes]
                cur = a.copy()
                for ax in axes[np.argsort(t_cross, kind="stable")][:-1]:
                    cur[ax] = b[ax]
                    out.append(cur.copy())
            out.append(b)
        seq = np.array(out)
    seq = seq[np.all((seq >= 0) & (seq < dims), axis=1)]
    flags = occ[seq[:, 0], seq[:, 1], seq[:, 2]]
    if not flags.any():
        return None, seq
    first = int(np.argmax(flags))
    return seq[first], seq[:first]


def oracle_raycast(grid: VoxelGrid, origins, step: float) -> VoxelGrid:
    """Reference visibility by marching every ray in increments of ``step``."""
    spec = grid.spec
    if step > spec.voxel_size / 10:
        raise ValueError("step must be <= voxel_size / 10")
    occ = grid.states == State.OCCUPIED
    dims = np.asarray(spec.dims)
    observed = np.zeros(spec.dims, dtype=bool)
    traversed = np.zeros(spec.dims, dtype=bool)
    targets = np.argwhere(occ) + 0.5
    step_g = step / spec.voxel_size
    for origin in np.asarray(origins, dtype=np.float64).reshape(-1, 3):
        g0 = (origin - spec.origin) / spec.voxel_size
        for g1 in targets:
            d = g1 - g0
            length = float(np.linalg.norm(d))
            n = max(1, math.ceil(length / step_g))
            t = np.minimum(np.arange(n + 1) * (step_g / length), 1.0) if length else np.zeros(1)
            hit, free = _walk_sampled(occ, g0, d, t, dims)
            if hit is not None:
                observed[hit[0], hit[1], hit[2]] = True
            if len(free):
                traversed[free[:, 0], free[:, 1], free[:, 2]] = True
    return VoxelGrid(spec, compose_states(occ, observed, traversed))
