"""Pipeline configuration and its TOML round trip."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import tomli
import tomli_w

from .ground import GroundSeedConfig
from .octree import OctreeConfig
from .voxel import GridSpec


@dataclass(frozen=True)
class GridConfig:
    """Occupancy grid layout. With ``ego_centered`` the origin is relative to the camera center."""

    origin_m: tuple[float, float, float] = (-40.0, -40.0, -2.8)
    voxel_size_m: float = 0.4
    dims: tuple[int, int, int] = (200, 200, 16)
    ego_centered: bool = True

    def __post_init__(self):
        if not self.voxel_size_m > 0 or min(self.dims) < 1:
            raise ValueError("grid voxel size and dims must be positive")

    def spec_for(self, camera_center=None) -> GridSpec:
        spec = GridSpec(self.origin_m, self.voxel_size_m, self.dims)
        if self.ego_centered and camera_center is not None:
            spec = spec.shifted(camera_center)
        return spec


@dataclass(frozen=True)
class PipelineConfig:
    range_m: float = 40.0
    range_shape: str = "sphere"
    target_count: int = 170_000
    seed: int = 0
    grid: GridConfig = GridConfig()
    octree_base_voxel_size_m: float = 8.0
    octree_anchors_per_voxel: int = 10
    octree_expand_threshold: float = 64.0
    octree_contract_threshold: float = 0.0
    ground_grid_spacing_m: float = 0.5
    ground_height_offset_m: float = 1.8
    ground_extent_m: float = 20.0
    box_inflation: float = 1.1
    # ego exclusion box, axis-aligned offsets from the camera center
    ego_min_m: tuple[float, float, float] = (-2.5, -1.2, -2.0)
    ego_max_m: tuple[float, float, float] = (2.5, 1.2, 0.2)
    camera_union: bool = True
    rig_offsets_m: tuple = ((0.0, 0.0, 0.0),)

    def __post_init__(self):
        if not self.range_m > 0:
            raise ValueError("range_m must be > 0")
        if self.range_shape not in ("sphere", "box"):
            raise ValueError(f"range_shape must be 'sphere' or 'box', got {self.range_shape!r}")
        if self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if not self.box_inflation > 0:
            raise ValueError("box_inflation must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if any(lo > hi for lo, hi in zip(self.ego_min_m, self.ego_max_m)):
            raise ValueError("ego_min_m must not exceed ego_max_m")
        if len(self.rig_offsets_m) < 1:
            raise ValueError("need at least one rig offset")
        self.octree()
        self.ground()

    def octree(self) -> OctreeConfig:
        return OctreeConfig(
            self.octree_base_voxel_size_m,
            self.octree_anchors_per_voxel,
            self.octree_expand_threshold,
            self.octree_contract_threshold,
        )

    def ground(self) -> GroundSeedConfig:
        return GroundSeedConfig(
            self.ground_grid_spacing_m, self.ground_height_offset_m, self.ground_extent_m
        )

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def to_dict(cfg: PipelineConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "grid":
            out["grid"] = {g.name: _plain(getattr(value, g.name)) for g in dataclasses.fields(value)}
        else:
            out[f.name] = _plain(value)
    # tables must follow plain keys in TOML
    out["grid"] = out.pop("grid")
    return out


def _tuples(value):
    if isinstance(value, list):
        return tuple(_tuples(v) for v in value)
    return value


_FLOAT_FIELDS = {
    "range_m", "octree_base_voxel_size_m", "octree_expand_threshold",
    "octree_contract_threshold", "ground_grid_spacing_m", "ground_height_offset_m",
    "ground_extent_m", "box_inflation", "voxel_size_m",
}
_VEC_FIELDS = {"ego_min_m", "ego_max_m", "origin_m"}


def _coerce(name, value):
    if name in _FLOAT_FIELDS and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if name in _VEC_FIELDS:
        return tuple(float(v) for v in value)
    if name == "rig_offsets_m":
        return tuple(tuple(float(v) for v in row) for row in value)
    return _tuples(value)


def from_dict(data: dict) -> PipelineConfig:
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: _coerce(k, v) for k, v in data.items() if k != "grid"}
    if "grid" in data:
        grid_known = {f.name for f in dataclasses.fields(GridConfig)}
        bad = set(data["grid"]) - grid_known
        if bad:
            raise ValueError(f"unknown [grid] keys: {sorted(bad)}")
        kwargs["grid"] = GridConfig(**{k: _coerce(k, v) for k, v in data["grid"].items()})
    return PipelineConfig(**kwargs)


def dumps(cfg: PipelineConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def loads(text: str) -> PipelineConfig:
    return from_dict(tomli.loads(text))
