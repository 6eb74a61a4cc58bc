"""Multi-level anchor index over a sparse point cloud.

Level ``L`` quantizes points onto the lattice of pitch ``eps / 2**L`` with
round-half-to-even. Voxels are keyed by the integer lattice coordinate
``k = round(p / pitch)`` so keys never collide through float error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDistances, EmptyInput, LevelOutOfRange
from .geom import PointCloud

_CHUNK = 1 << 22


@dataclass(frozen=True)
class OctreeConfig:
    base_voxel_size: float
    anchors_per_voxel: int = 10
    expand_threshold: float = 64
    contract_threshold: float = 0

    def __post_init__(self):
        if not self.base_voxel_size > 0:
            raise ValueError("base_voxel_size must be > 0")
        if self.anchors_per_voxel < 1:
            raise ValueError("anchors_per_voxel must be >= 1")
        if not self.expand_threshold > self.contract_threshold >= 0:
            raise ValueError("need expand_threshold > contract_threshold >= 0")


@dataclass(frozen=True, eq=False)
class AnchorVoxel:
    level: int
    key: tuple[int, int, int]
    center: np.ndarray
    anchor_points: np.ndarray
    source_count: int
    # indices into OctreeIndex.points, ascending
    members: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class OctreeIndex:
    levels: int
    base_voxel_size: float
    anchors_per_voxel: int
    points: np.ndarray = field(repr=False)
    voxels: tuple[dict, ...] = field(repr=False)

    def pitch(self, level: int) -> float:
        return self.base_voxel_size / 2**level

    def level_keys(self, level: int) -> list[tuple[int, int, int]]:
        return sorted(self.voxels[level])

    def counts(self) -> list[int]:
        return [len(v) for v in self.voxels]

    def __len__(self):
        return sum(self.counts())


def _camera_array(cameras) -> np.ndarray:
    cams = np.asarray(
        [getattr(c, "camera_center", c) for c in cameras], dtype=np.float64
    ).reshape(-1, 3)
    return cams


def _points_array(points) -> np.ndarray:
    if isinstance(points, PointCloud):
        return points.points
    return np.asarray(points, dtype=np.float64).reshape(-1, 3)


def distance_range(camera_centers, points) -> tuple[float, float]:
    """Smallest and largest distance over all camera/point pairs."""
    cams = _camera_array(camera_centers)
    pts = _points_array(points)
    if len(cams) == 0 or len(pts) == 0:
        raise EmptyInput("need at least one camera and one point")
    d_min, d_max = math.inf, 0.0
    step = max(1, _CHUNK // len(cams))
    for start in range(0, len(pts), step):
        block = pts[start : start + step]
        d = np.linalg.norm(block[None, :, :] - cams[:, None, :], axis=-1)
        d_min = min(d_min, float(d.min()))
        d_max = max(d_max, float(d.max()))
    return d_min, d_max


def compute_level_count(camera_centers, points) -> int:
    d_min, d_max = distance_range(camera_centers, points)
    if d_min <= 0.0:
        raise DegenerateDistances("a camera center coincides with a point (d_min = 0)")
    return int(np.round(np.log2(d_max / d_min))) + 1


def lattice_keys(points, eps: float, level: int) -> np.ndarray:
    pitch = eps / 2**level
    return np.round(_points_array(points) / pitch).astype(np.int64)


def quantize_to_level(p, eps: float, level: int) -> np.ndarray:
    """Voxel center of ``p`` at ``level``; works on a single point or an N x 3 array."""
    pitch = eps / 2**level
    return np.round(np.asarray(p, dtype=np.float64) / pitch) * pitch


def _make_voxel(level, key, points, members, eps, m) -> AnchorVoxel:
    pitch = eps / 2**level
    center = np.asarray(key, dtype=np.float64) * pitch
    return AnchorVoxel(
        level=level,
        key=key,
        center=center,
        anchor_points=points[members[:m]].copy(),
        source_count=len(members),
        members=members,
    )


def _group(points, indices, eps, level, m) -> dict:
    keys = lattice_keys(points[indices], eps, level)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
    out = {}
    for g, row in enumerate(uniq):
        key = (int(row[0]), int(row[1]), int(row[2]))
        members = indices[order[bounds[g] : bounds[g + 1]]]
        out[key] = _make_voxel(level, key, points, members, eps, m)
    return out


def build_index(points, cameras, cfg: OctreeConfig) -> OctreeIndex:
    pts = _points_array(points).copy()
    levels = compute_level_count(cameras, pts)
    pts.flags.writeable = False
    idx = np.arange(len(pts))
    voxels = tuple(
        _group(pts, idx, cfg.base_voxel_size, L, cfg.anchors_per_voxel) for L in range(levels)
    )
    return OctreeIndex(levels, cfg.base_voxel_size, cfg.anchors_per_voxel, pts, voxels)


def drop_points(index: OctreeIndex, keep) -> OctreeIndex:
    """Remove points from every voxel's membership; emptied voxels stay (count 0)."""
    keep = np.asarray(keep, dtype=bool)
    new_levels = []
    for L, level in enumerate(index.voxels):
        new = {}
        for key, vox in level.items():
            members = vox.members[keep[vox.members]]
            new[key] = _make_voxel(
                L, key, index.points, members, index.base_voxel_size, index.anchors_per_voxel
            )
        new_levels.append(new)
    return OctreeIndex(
        index.levels, index.base_voxel_size, index.anchors_per_voxel, index.points, tuple(new_levels)
    )


def _child_keys(index: OctreeIndex, vox: AnchorVoxel) -> np.ndarray:
    return lattice_keys(index.points[vox.members], index.base_voxel_size, vox.level + 1)


def adapt(index: OctreeIndex, cfg: OctreeConfig) -> OctreeIndex:
    """One expand/contract pass, decided entirely on the input index.

    Dense voxels (count >= expand_threshold, not at the finest level) make
    sure every level+1 voxel their points quantize to exists and holds those
    points. Sparse childless voxels (count <= contract_threshold) are removed.
    """
    eps, m = index.base_voxel_size, index.anchors_per_voxel
    new_levels = [dict(level) for level in index.voxels]

    for L, level in enumerate(index.voxels):
        if L + 1 >= index.levels:
            continue
        for key in sorted(level):
            vox = level[key]
            if vox.source_count < cfg.expand_threshold or vox.source_count == 0:
                continue
            spawned = _group(index.points, vox.members, eps, L + 1, m)
            target = new_levels[L + 1]
            for ckey, child in spawned.items():
                prev = target.get(ckey)
                if prev is None:
                    target[ckey] = child
                    continue
                merged = np.union1d(prev.members, child.members)
                if len(merged) != len(prev.members):
                    target[ckey] = _make_voxel(L + 1, ckey, index.points, merged, eps, m)

    for L, level in enumerate(index.voxels):
        finer = index.voxels[L + 1] if L + 1 < index.levels else {}
        for key, vox in level.items():
            if vox.source_count > cfg.contract_threshold:
                continue
            if vox.source_count and finer:
                ck = _child_keys(index, vox)
                if any((int(a), int(b), int(c)) in finer for a, b, c in ck):
                    continue
            new_levels[L].pop(key, None)

    return OctreeIndex(index.levels, eps, m, index.points, tuple(new_levels))


def query_cumulative(index: OctreeIndex, max_level: int) -> list[AnchorVoxel]:
    """All voxels at levels 0..max_level, level-major then key order."""
    if not 0 <= max_level < index.levels:
        raise LevelOutOfRange(f"max_level {max_level} outside [0, {index.levels})")
    out = []
    for L in range(max_level + 1):
        level = index.voxels[L]
        out.extend(level[k] for k in sorted(level))
    return out


def dump_lines(index: OctreeIndex):
    """Text rows ``level kx ky kz cx cy cz source_count n_anchors``."""
    yield f"# levels={index.levels} base_voxel_size={index.base_voxel_size!r} anchors_per_voxel={index.anchors_per_voxel}"
    for vox in query_cumulative(index, index.levels - 1):
        cx, cy, cz = (repr(float(v)) for v in vox.center)
        yield (
            f"{vox.level} {vox.key[0]} {vox.key[1]} {vox.key[2]} {cx} {cy} {cz} "
            f"{vox.source_count} {len(vox.anchor_points)}"
        )
