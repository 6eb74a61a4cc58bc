"""Slow, obviously-correct reference implementations used only by tests."""

import math
from fractions import Fraction

import numpy as np


def voxelize_bruteforce(points, origin, voxel_size, dims):
    """Set of occupied (i, j, k) by per-point floor division."""
    out = set()
    for p in np.asarray(points, dtype=float):
        ijk = tuple(int(math.floor((p[a] - origin[a]) / voxel_size)) for a in range(3))
        if all(0 <= ijk[a] < dims[a] for a in range(3)):
            out.add(ijk)
    return out


def chamfer_bruteforce(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def directed(src, dst):
        total = 0.0
        for p in src:
            total += min(math.dist(p, q) for q in dst)
        return total / len(src)

    return directed(a, b) + directed(b, a)


def quantize_exact(p, eps, level):
    """Lattice key via exact rational arithmetic and Python's half-even round()."""
    pitch = Fraction(eps) / 2**level
    return tuple(round(Fraction(float(c)) / pitch) for c in p)


def level_counts_bruteforce(points, eps, levels):
    return [len({quantize_exact(p, eps, L) for p in points}) for L in range(levels)]


def nearest_camera_bruteforce(xy, cams):
    """cams: list of (frame_id, (x, y)); returns frame_id of the nearest, lowest id on ties."""
    best = None
    for fid, c in sorted(cams):
        d = (xy[0] - c[0]) ** 2 + (xy[1] - c[1]) ** 2
        if best is None or d < best[0]:
            best = (d, fid)
    return best[1]


def axis_face_cover(faces, origin, voxel_size, dims):
    """Cells whose closed cube meets an axis-aligned rectangle.

    faces: list of (axis, value, (lo, hi) on the other two axes in order).
    Interval arithmetic only; no sampling.
    """
    hits = set()
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                lo = [origin[0] + i * voxel_size, origin[1] + j * voxel_size, origin[2] + k * voxel_size]
                hi = [c + voxel_size for c in lo]
                for axis, value, spans in faces:
                    if not lo[axis] <= value <= hi[axis]:
                        continue
                    others = [a for a in range(3) if a != axis]
                    if all(lo[a] <= s[1] and s[0] <= hi[a] for a, s in zip(others, spans)):
                        hits.add((i, j, k))
                        break
    return hits
