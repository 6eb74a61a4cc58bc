"""Chamfer distance and masked voxel confusion metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, SpecMismatch
from .geom import PointCloud
from .voxel import State, VoxelGrid


def _pts(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def nearest_distances(src, dst) -> np.ndarray:
    """Distance from each point of ``src`` to its nearest neighbour in ``dst``."""
    d, _ = cKDTree(_pts(dst)).query(_pts(src), k=1)
    return d


def chamfer(a, b) -> float:
    """Sum of the two directed mean nearest-neighbour distances (unsquared)."""
    pa, pb = _pts(a), _pts(b)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyCloud("chamfer distance needs two non-empty clouds")
    # np.mean reduces pairwise in a fixed order
    return float(np.mean(nearest_distances(pa, pb)) + np.mean(nearest_distances(pb, pa)))


@dataclass(frozen=True)
class VoxelConfusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class VoxelScores:
    iou: float
    f1: float
    precision: float
    recall: float
    confusion: VoxelConfusion

    def as_dict(self) -> dict:
        c = self.confusion
        return {
            "iou": self.iou, "f1": self.f1, "precision": self.precision, "recall": self.recall,
            "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
        }


def confusion(pred: VoxelGrid, gt: VoxelGrid, mask) -> VoxelConfusion:
    p = pred.states[mask] == State.OCCUPIED
    g = gt.states[mask] == State.OCCUPIED
    return VoxelConfusion(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
        tn=int(np.count_nonzero(~p & ~g)),
    )


def _ratio(num: int, den: int, both_empty: bool) -> float:
    if den == 0:
        return 1.0 if both_empty else 0.0
    return num / den


def voxel_metrics(pred: VoxelGrid, gt: VoxelGrid, mask="gt-observed") -> VoxelScores:
    """IoU, F1, precision and recall of OCCUPIED over the masked cells.

    ``mask`` is ``"gt-observed"`` (cells where gt is not UNOBSERVED) or a
    boolean array shaped like the grid. A rate with an empty denominator is
    1.0 when both prediction and truth have no positives, else 0.0.
    """
    if pred.spec != gt.spec:
        raise SpecMismatch(
            f"grid specs differ: dims {pred.spec.dims} vs {gt.spec.dims}, "
            f"voxel {pred.spec.voxel_size} vs {gt.spec.voxel_size}"
        )
    if isinstance(mask, str):
        if mask != "gt-observed":
            raise ValueError(f"unknown mask {mask!r}")
        mask = gt.states != State.UNOBSERVED
    mask = np.asarray(mask, dtype=bool)
    c = confusion(pred, gt, mask)
    both_empty = c.tp + c.fp + c.fn == 0
    iou = _ratio(c.tp, c.tp + c.fp + c.fn, both_empty)
    precision = _ratio(c.tp, c.tp + c.fp, both_empty)
    recall = _ratio(c.tp, c.tp + c.fn, both_empty)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return VoxelScores(iou, f1, precision, recall, c)
