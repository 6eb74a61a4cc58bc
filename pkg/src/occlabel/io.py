"""File formats: PLY point clouds, pose and track text files, OCV1 grids."""

from __future__ import annotations

import os
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .dynamic import TrackedBox
from .errors import (
    MalformedHeader,
    NonRigidRotation,
    ParseError,
    TruncatedPayload,
    UnsupportedFormat,
)
from .geom import NO_TRACK, CameraFrame, PointCloud, Pose, nearest_rotation, orthonormality_error
from .voxel import VoxelGrid

ROTATION_TOLERANCE = 1e-4
_TRACK_NONE = 0xFFFFFFFF

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class PlyWarning(UserWarning):
    pass


class RotationWarning(UserWarning):
    pass


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- PLY


def _parse_header(fh, source):
    first = fh.readline()
    if first.strip() != b"ply":
        raise MalformedHeader(f"{source}: missing 'ply' magic line")
    fmt = None
    elements = []  # [name, count, [(prop, dtype)]]
    n_lines = 1
    while True:
        raw = fh.readline()
        n_lines += 1
        if not raw:
            raise MalformedHeader(f"{source}: header has no end_header")
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError as exc:
            raise MalformedHeader(f"{source}: non-ascii header line") from exc
        if not line or line.startswith(("comment", "obj_info")):
            continue
        words = line.split()
        if words[0] == "end_header":
            break
        if words[0] == "format":
            if len(words) != 3 or words[2] != "1.0":
                raise MalformedHeader(f"{source}: bad format line {line!r}")
            if words[1] == "binary_big_endian":
                raise UnsupportedFormat(f"{source}: big-endian PLY is not supported")
            if words[1] not in ("ascii", "binary_little_endian"):
                raise UnsupportedFormat(f"{source}: unknown PLY format {words[1]!r}")
            fmt = words[1]
        elif words[0] == "element":
            if len(words) != 3 or not words[2].isdigit():
                raise MalformedHeader(f"{source}: bad element line {line!r}")
            elements.append([words[1], int(words[2]), []])
        elif words[0] == "property":
            if not elements:
                raise MalformedHeader(f"{source}: property before any element")
            if words[1] == "list":
                raise UnsupportedFormat(
                    f"{source}: list property in element {elements[-1][0]!r} is not supported"
                )
            if len(words) != 3 or words[1] not in _PLY_TYPES:
                raise MalformedHeader(f"{source}: bad property line {line!r}")
            elements[-1][2].append((words[2], _PLY_TYPES[words[1]]))
        else:
            raise MalformedHeader(f"{source}: unexpected header line {line!r}")
    if fmt is None:
        raise MalformedHeader(f"{source}: no format line")
    return fmt, elements, n_lines


def _read_ascii_rows(fh, count, n_props, source, first_line):
    rows = []
    line_no = first_line
    while len(rows) < count:
        raw = fh.readline()
        if not raw:
            raise TruncatedPayload(f"{source}: expected {count} rows, found {len(rows)}")
        line_no += 1
        words = raw.split()
        if not words:
            continue
        if len(words) != n_props:
            raise ParseError(source, line_no, f"expected {n_props} values, got {len(words)}")
        try:
            rows.append([float(w) for w in words])
        except ValueError as exc:
            raise ParseError(source, line_no, str(exc)) from exc
    return np.array(rows, dtype=np.float64).reshape(count, n_props), line_no


def read_ply(path) -> PointCloud:
    source = str(path)
    with open(path, "rb") as fh:
        fmt, elements, line_no = _parse_header(fh, source)
        data = None
        for name, count, props in elements:
            dtype = np.dtype([(p, "<" + t) for p, t in props])
            if fmt == "binary_little_endian":
                nbytes = count * dtype.itemsize
                buf = fh.read(nbytes)
                if len(buf) < nbytes:
                    raise TruncatedPayload(
                        f"{source}: element {name!r} needs {nbytes} bytes, found {len(buf)}"
                    )
                arr = np.frombuffer(buf, dtype=dtype, count=count)
                cols = {p: arr[p] for p, _ in props}
            else:
                rows, line_no = _read_ascii_rows(fh, count, len(props), source, line_no)
                cols = {p: rows[:, i] for i, (p, _) in enumerate(props)}
            if name == "vertex":
                data = (cols, props, count)
                break
            warnings.warn(f"{source}: skipping element {name!r}", PlyWarning, stacklevel=2)
    if data is None:
        raise MalformedHeader(f"{source}: no vertex element")
    cols, props, count = data
    names = [p for p, _ in props]
    for axis in "xyz":
        if axis not in cols:
            raise MalformedHeader(f"{source}: vertex element lacks property {axis!r}")
    unknown = [p for p in names if p not in ("x", "y", "z", "label", "track_id")]
    if unknown:
        warnings.warn(f"{source}: skipping unknown vertex properties {', '.join(unknown)}", PlyWarning, stacklevel=2)
    pts = np.column_stack([np.asarray(cols[a], dtype=np.float64) for a in "xyz"]).reshape(count, 3)
    labels = tracks = None
    if "label" in cols:
        labels = np.asarray(cols["label"]).astype(np.uint8)
    if "track_id" in cols:
        raw = np.asarray(cols["track_id"]).astype(np.int64)
        tracks = np.where(raw == _TRACK_NONE, NO_TRACK, raw)
        if labels is None:
            labels = np.zeros(count, dtype=np.uint8)
    return PointCloud(pts, labels, tracks)


def _ply_header(fmt: str, n: int, labelled: bool) -> bytes:
    lines = ["ply", f"format {fmt} 1.0", "comment frame z-up metres", f"element vertex {n}",
             "property double x", "property double y", "property double z"]
    if labelled:
        lines += ["property uchar label", "property uint track_id"]
    lines.append("end_header")
    return ("\n".join(lines) + "\n").encode("ascii")


def ply_bytes(cloud: PointCloud, binary: bool = True) -> bytes:
    labelled = cloud.labels is not None
    n = len(cloud)
    fmt = "binary_little_endian" if binary else "ascii"
    head = _ply_header(fmt, n, labelled)
    tracks = None
    if labelled:
        tracks = np.where(cloud.track_ids == NO_TRACK, _TRACK_NONE, cloud.track_ids).astype(np.uint32)
    if binary:
        fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
        if labelled:
            fields += [("label", "u1"), ("track_id", "<u4")]
        arr = np.empty(n, dtype=np.dtype(fields))
        arr["x"], arr["y"], arr["z"] = cloud.points.T
        if labelled:
            arr["label"] = cloud.labels
            arr["track_id"] = tracks
        return head + arr.tobytes()
    rows = []
    for i, (x, y, z) in enumerate(cloud.points.tolist()):
        row = f"{x!r} {y!r} {z!r}"
        if labelled:
            row += f" {int(cloud.labels[i])} {int(tracks[i])}"
        rows.append(row)
    body = "\n".join(rows) + ("\n" if rows else "")
    return head + body.encode("ascii")


def write_ply(cloud: PointCloud, path, binary: bool = True) -> None:
    atomic_write(path, ply_bytes(cloud, binary))


# ---------------------------------------------------------------- poses and tracks


def _records(path, n_fields):
    source = str(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            words = text.split()
            if len(words) != n_fields:
                raise ParseError(source, line_no, f"expected {n_fields} fields, got {len(words)}")
            try:
                ident = [int(w) for w in words[: n_fields - _float_count(n_fields)]]
                values = [float(w) for w in words[len(ident) :]]
            except ValueError as exc:
                raise ParseError(source, line_no, str(exc)) from exc
            if not np.all(np.isfinite(values)):
                raise ParseError(source, line_no, "non-finite value")
            yield line_no, ident, values


def _float_count(n_fields):
    # poses: 1 id + 12 numbers; tracks: 2 ids + 7 numbers
    return 12 if n_fields == 13 else 7


def checked_rotation(rot, source, line_no) -> np.ndarray:
    rot = np.asarray(rot, dtype=np.float64).reshape(3, 3)
    err = orthonormality_error(rot)
    if err > ROTATION_TOLERANCE:
        raise NonRigidRotation(source, line_no, f"rotation is not rigid (error {err:.3g})")
    if err > 1e-9:
        warnings.warn(
            f"{source}:{line_no}: rotation off by {err:.3g}, projected to nearest rotation",
            RotationWarning,
            stacklevel=3,
        )
        rot = nearest_rotation(rot)
    return rot


def read_poses(path) -> list[CameraFrame]:
    """``frame_id tx ty tz r00 r01 r02 r10 ... r22`` per line, camera-to-world."""
    frames, seen = [], set()
    for line_no, (fid,), v in _records(path, 13):
        if fid in seen:
            raise ParseError(str(path), line_no, f"duplicate frame_id {fid}")
        seen.add(fid)
        rot = checked_rotation(v[3:], str(path), line_no)
        frames.append(CameraFrame(fid, Pose(rot, v[:3])))
    return frames


def write_poses(frames, path) -> None:
    lines = []
    for f in frames:
        nums = list(f.pose.translation) + list(f.pose.rotation.ravel())
        lines.append(" ".join([str(f.frame_id)] + [repr(float(x)) for x in nums]))
    atomic_write(path, "\n".join(lines) + "\n")


def read_tracks(path) -> list[TrackedBox]:
    """``track_id frame_id cx cy cz l w h yaw`` per line, yaw in radians about +z."""
    boxes, seen = [], set()
    for line_no, (tid, fid), v in _records(path, 9):
        if (tid, fid) in seen:
            raise ParseError(str(path), line_no, f"duplicate box for track {tid} frame {fid}")
        seen.add((tid, fid))
        try:
            boxes.append(TrackedBox.from_yaw(tid, fid, v[:3], v[3:6], v[6]))
        except ValueError as exc:
            raise ParseError(str(path), line_no, str(exc)) from exc
    return boxes


def write_tracks(boxes, path) -> None:
    lines = []
    for b in boxes:
        nums = list(b.pose.translation) + list(b.size) + [b.yaw]
        lines.append(f"{b.track_id} {b.frame_id} " + " ".join(repr(float(x)) for x in nums))
    atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- OCV1


def write_ocv(grid: VoxelGrid, path) -> None:
    atomic_write(path, grid.to_bytes())


def read_ocv(path) -> VoxelGrid:
    return VoxelGrid.from_bytes(Path(path).read_bytes(), source=str(path))
