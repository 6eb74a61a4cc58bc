"""Tri-state voxel grids, voxelization and first-hit ray casting.

Cells are addressed ``states[i, j, k]`` with ``i`` along x. The flat,
serialized order is x-fastest: ``flat = i + nx * (j + ny * k)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidInputState, MalformedHeader, TruncatedPayload
from .geom import PointCloud, as_vec3

DEFAULT_MAX_CELLS = 1 << 28
OCV1_MAGIC = b"OCV1"
_OCV1_HEADER = struct.Struct("<4s3I4d")


class State(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNOBSERVED = 2


@dataclass(frozen=True, eq=False)
class GridSpec:
    origin: np.ndarray
    voxel_size: float
    dims: tuple[int, int, int]
    max_cells: int = DEFAULT_MAX_CELLS

    def __post_init__(self):
        origin = as_vec3(self.origin).copy()
        origin.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be > 0")
        object.__setattr__(self, "voxel_size", float(self.voxel_size))
        if self.n_cells > self.max_cells:
            raise ValueError(f"grid has {self.n_cells} cells, cap is {self.max_cells}")

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.voxel_size * np.asarray(self.dims)

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.voxel_size == other.voxel_size
            and bool(np.array_equal(self.origin, other.origin))
        )

    def __hash__(self):
        return hash((self.dims, self.voxel_size, tuple(self.origin)))

    def shifted(self, offset) -> GridSpec:
        return GridSpec(self.origin + as_vec3(offset), self.voxel_size, self.dims, self.max_cells)

    def cell_index(self, points) -> np.ndarray:
        """Integer cell of each point (may lie outside the grid)."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.floor((pts - self.origin) / self.voxel_size).astype(np.int64)

    def in_bounds(self, ijk) -> np.ndarray:
        ijk = np.asarray(ijk)
        return np.all((ijk >= 0) & (ijk < np.asarray(self.dims)), axis=-1)

    def cell_centers(self, ijk=None) -> np.ndarray:
        if ijk is None:
            ijk = np.indices(self.dims).reshape(3, -1).T
        return self.origin + (np.asarray(ijk, dtype=np.float64) + 0.5) * self.voxel_size


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    spec: GridSpec
    states: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.uint8)
        if states.shape != self.spec.dims:
            raise ValueError(f"states shape {states.shape} != dims {self.spec.dims}")
        if states.size and states.max() > State.UNOBSERVED:
            raise ValueError("states must be 0, 1 or 2")
        object.__setattr__(self, "states", states)

    @classmethod
    def filled(cls, spec: GridSpec, state: State = State.FREE) -> VoxelGrid:
        return cls(spec, np.full(spec.dims, int(state), dtype=np.uint8))

    def mask(self, state: State) -> np.ndarray:
        return self.states == state

    def count(self, state: State) -> int:
        return int(np.count_nonzero(self.states == state))

    @property
    def is_tristate(self) -> bool:
        return bool(np.any(self.states == State.UNOBSERVED))

    def flat(self) -> np.ndarray:
        return self.states.ravel(order="F")

    def to_bytes(self) -> bytes:
        nx, ny, nz = self.spec.dims
        o = self.spec.origin
        head = _OCV1_HEADER.pack(OCV1_MAGIC, nx, ny, nz, o[0], o[1], o[2], self.spec.voxel_size)
        return head + self.flat().tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, source: str = "<bytes>") -> VoxelGrid:
        if len(data) < _OCV1_HEADER.size:
            raise TruncatedPayload(f"{source}: {len(data)} bytes is shorter than the OCV1 header")
        magic, nx, ny, nz, ox, oy, oz, vs = _OCV1_HEADER.unpack_from(data)
        if magic != OCV1_MAGIC:
            raise MalformedHeader(f"{source}: bad magic {magic!r}")
        n = nx * ny * nz
        body = data[_OCV1_HEADER.size :]
        if len(body) != n:
            raise TruncatedPayload(f"{source}: expected {n} cell bytes, found {len(body)}")
        spec = GridSpec((ox, oy, oz), vs, (nx, ny, nz), max_cells=max(n, DEFAULT_MAX_CELLS))
        flat = np.frombuffer(body, dtype=np.uint8)
        if flat.size and flat.max() > State.UNOBSERVED:
            raise MalformedHeader(f"{source}: cell value {int(flat.max())} is not a valid state")
        return cls(spec, flat.reshape((nx, ny, nz), order="F").copy())


def voxelize(cloud, spec: GridSpec) -> VoxelGrid:
    """OCCUPIED where at least one point falls in the half-open cell, FREE elsewhere."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    states = np.zeros(spec.dims, dtype=np.uint8)
    if len(pts):
        ijk = spec.cell_index(pts)
        ijk = ijk[spec.in_bounds(ijk)]
        states[ijk[:, 0], ijk[:, 1], ijk[:, 2]] = State.OCCUPIED
    return VoxelGrid(spec, states)


def _entry_parameters(g0: np.ndarray, d: np.ndarray, dims: np.ndarray) -> np.ndarray:
    """Ray parameter where each segment g0 + t d, t in [0, 1], enters the box [0, dims].

    Segments that miss the box get ``inf``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (0.0 - g0) / d
        t1 = (dims - g0) / d
    lo = np.where(d == 0.0, -np.inf, np.minimum(t0, t1))
    hi = np.where(d == 0.0, np.inf, np.maximum(t0, t1))
    t_enter = np.maximum(lo.max(axis=1), 0.0)
    t_exit = np.minimum(hi.min(axis=1), 1.0)
    outside_slab = (d == 0.0) & ((g0 < 0.0) | (g0 > dims))
    miss = (t_enter > t_exit) | outside_slab.any(axis=1)
    return np.where(miss, np.inf, t_enter)


def traverse_first_hit(occ: np.ndarray, g0: np.ndarray, g1: np.ndarray):
    """Amanatides-Woo traversal of many segments through a boolean grid.

    ``g0``/``g1`` are segment endpoints in grid units (cell ``i`` spans
    [i, i+1)). Each ray walks from ``g0`` (clipped to the grid) towards
    ``g1`` and stops at the first occupied cell. On exact ties the axis with
    the smallest index steps first.

    Returns ``(hit_cells, free_cells)``: hit_cells is R x 3 with -1 rows for
    rays that never hit; free_cells lists every cell walked before the hit.
    """
    dims = np.asarray(occ.shape, dtype=np.int64)
    g0 = np.asarray(g0, dtype=np.float64).reshape(-1, 3)
    g1 = np.asarray(g1, dtype=np.float64).reshape(-1, 3)
    d = g1 - g0
    n_rays = len(g0)
    hits = np.full((n_rays, 3), -1, dtype=np.int64)
    if n_rays == 0:
        return hits, np.zeros((0, 3), dtype=np.int64)

    t_enter = _entry_parameters(g0, d, dims)
    start = g0 + np.where(np.isfinite(t_enter), t_enter, 0.0)[:, None] * d
    cell = np.clip(np.floor(start).astype(np.int64), 0, dims - 1)

    step = np.sign(d).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(d != 0.0, 1.0 / d, np.inf)
        boundary = cell + (step > 0)
        t_max = np.where(step != 0, (boundary - g0) * inv, np.inf)
        t_delta = np.where(step != 0, np.abs(inv), np.inf)

    active = np.flatnonzero(np.isfinite(t_enter))
    free_chunks = []
    rows = np.arange(n_rays)
    max_iter = int(dims.sum()) + 4
    for _ in range(max_iter):
        if active.size == 0:
            break
        c = cell[active]
        is_occ = occ[c[:, 0], c[:, 1], c[:, 2]]
        hits[active[is_occ]] = c[is_occ]
        free_chunks.append(c[~is_occ])
        active = active[~is_occ]
        if active.size == 0:
            break
        tm = t_max[active]
        axis = np.argmin(tm, axis=1)  # first minimum: x before y before z
        t_next = tm[np.arange(active.size), axis]
        sel = (rows[: active.size], axis)
        cell_a = cell[active]
        cell_a[sel] += step[active, axis]
        cell[active] = cell_a
        tm[sel] += t_delta[active, axis]
        t_max[active] = tm
        inside = np.all((cell_a >= 0) & (cell_a < dims), axis=1) & (t_next <= 1.0 + 1e-9)
        active = active[inside]
    free = np.concatenate(free_chunks) if free_chunks else np.zeros((0, 3), dtype=np.int64)
    return hits, free


def raycast_visibility(grid: VoxelGrid, camera_origins) -> VoxelGrid:
    """Tri-state labels from first-hit ray casting towards every occupied cell.

    A ray runs from each camera origin to the center of each OCCUPIED cell.
    The first occupied cell it meets is observed, cells walked before that
    are FREE; everything else ends UNOBSERVED. Visibility is the union over
    origins.
    """
    if grid.is_tristate:
        raise InvalidInputState("grid already carries UNOBSERVED cells")
    spec = grid.spec
    occ = grid.states == State.OCCUPIED
    targets = np.argwhere(occ)
    observed = np.zeros(spec.dims, dtype=bool)
    traversed = np.zeros(spec.dims, dtype=bool)
    g1 = targets + 0.5
    for origin in np.asarray(camera_origins, dtype=np.float64).reshape(-1, 3):
        g0 = np.broadcast_to((origin - spec.origin) / spec.voxel_size, g1.shape)
        hits, free = traverse_first_hit(occ, g0, g1)
        hits = hits[hits[:, 0] >= 0]
        observed[hits[:, 0], hits[:, 1], hits[:, 2]] = True
        traversed[free[:, 0], free[:, 1], free[:, 2]] = True
    return VoxelGrid(spec, compose_states(occ, observed, traversed))


def compose_states(occ: np.ndarray, observed: np.ndarray, traversed: np.ndarray) -> np.ndarray:
    states = np.full(occ.shape, int(State.UNOBSERVED), dtype=np.uint8)
    states[traversed & ~occ] = State.FREE
    states[observed & occ] = State.OCCUPIED
    return states
