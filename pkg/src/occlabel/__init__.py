"""Tri-state occupancy label curation from vision-reconstructed point clouds."""

from .geom import CameraFrame, Label, PointCloud, Pose, compose, invert, transform_points
from .voxel import GridSpec, State, VoxelGrid, raycast_visibility, voxelize

__version__ = "0.1.0"

__all__ = [
    "CameraFrame",
    "GridSpec",
    "Label",
    "PointCloud",
    "Pose",
    "State",
    "VoxelGrid",
    "compose",
    "invert",
    "raycast_visibility",
    "transform_points",
    "voxelize",
]
