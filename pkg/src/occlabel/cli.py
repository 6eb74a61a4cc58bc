"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error. Logs go to stderr;
data goes to files under ``--out`` (or stdout where noted).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import re
import sys
from pathlib import Path

import tomli

from . import config as config_mod
from . import io
from .config import PipelineConfig
from .curation import curate_sequence, divide_frame, static_slice
from .dynamic import aggregate_track, group_tracks, observations_from_cloud
from .errors import OccLabelError, SpecMismatch
from .metrics import chamfer, voxel_metrics
from .octree import build_index, dump_lines
from .synth import (
    GroundProfile,
    SceneSpec,
    VehicleSpec,
    generate_scene,
    oracle_occupancy,
    street_scene,
)

log = logging.getLogger("occlabel")

_DYNAMIC_NAME = re.compile(r"track_(-?\d+)_frame_(-?\d+)\.ply$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} is not an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline config (TOML)")
    common.add_argument("--seed", type=_u64, help="override the config seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="occlabel", description="Tri-state occupancy label curation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic scene")
    p.add_argument("--scene-spec", type=Path, help="scene description (TOML)")
    p.add_argument("--ground", choices=["flat", "slope", "piecewise"])
    p.add_argument("--grade", type=float)
    p.add_argument("--frames", type=int)
    p.add_argument("--density", type=float, help="points per square metre")
    p.add_argument("--noise", type=float, help="jitter sigma in metres")

    p = sub.add_parser("divide", parents=[common], help="slice a scene into per-frame sweeps")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--poses", type=Path, required=True)
    p.add_argument("--frame", type=int, action="append", help="frame id (repeatable)")

    p = sub.add_parser("aggregate", parents=[common], help="densify tracks in their box frames")
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--dynamic", type=Path, help="directory of track_T_frame_F.ply observations")
    p.add_argument("--scene", type=Path, help="scene cloud, used when --dynamic is absent")

    p = sub.add_parser("curate", parents=[common], help="per-frame tri-state grids (OCV1)")
    p.add_argument("--input", type=Path, help="directory laid out like synth output")
    p.add_argument("--scene", type=Path)
    p.add_argument("--poses", type=Path)
    p.add_argument("--tracks", type=Path)
    p.add_argument("--dynamic", type=Path)

    p = sub.add_parser("eval", parents=[common], help="compare grids or point clouds")
    p.add_argument("--pred", type=Path, help="predicted OCV1 grid")
    p.add_argument("--gt", type=Path, help="ground-truth OCV1 grid")
    p.add_argument("--pred-ply", type=Path)
    p.add_argument("--gt-ply", type=Path)
    p.add_argument("--report", help="file name under --out for a key=value report")

    p = sub.add_parser("octree-dump", parents=[common], help="dump the anchor index as text")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--poses", type=Path, required=True)
    return parser


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config is not None:
        text = args.config.read_text(encoding="utf-8")
        try:
            cfg = config_mod.loads(text)
        except (tomli.TOMLDecodeError, ValueError, TypeError) as exc:
            raise OccLabelError(f"{args.config}: {exc}") from exc
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def scene_spec_from_dict(data: dict, seed: int, base: SceneSpec | None = None) -> SceneSpec:
    """Overlay TOML scene keys on ``base`` (the street scene by default)."""
    base = base or street_scene()
    data = dict(data)
    kw = {}
    if "ground" in data:
        kw["ground"] = GroundProfile(**data.pop("ground"))
    if data.get("vehicle", True) is False:
        data.pop("vehicle")
        kw["vehicle"] = None
    if "vehicle" in data:
        veh = dict(data.pop("vehicle"))
        for key in ("start_xy", "size"):
            if key in veh:
                veh[key] = tuple(veh[key])
        kw["vehicle"] = VehicleSpec(**veh)
    if "buildings" in data:
        kw["buildings"] = tuple(
            (tuple(b["min"]), tuple(b["max"])) for b in data.pop("buildings")
        )
    for key in ("ground_extent", "ego_start_xy"):
        if key in data:
            kw[key] = tuple(data.pop(key))
    if "rig_offsets" in data:
        kw["rig_offsets"] = tuple(tuple(r) for r in data.pop("rig_offsets"))
    data.pop("seed", None)
    kw.update(data)
    return dataclasses.replace(base, seed=seed, **kw)


def _need_out(args) -> Path:
    if args.out is None:
        raise UsageError(f"{args.command}: --out is required")
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def cmd_synth(args, cfg: PipelineConfig) -> int:
    out = _need_out(args)
    data = {}
    if args.scene_spec is not None:
        try:
            data = tomli.loads(args.scene_spec.read_text(encoding="utf-8"))
        except tomli.TOMLDecodeError as exc:
            raise OccLabelError(f"{args.scene_spec}: {exc}") from exc
    if args.ground is not None:
        ground = dict(data.get("ground", {}), kind=args.ground)
        data["ground"] = ground
    if args.grade is not None:
        data["ground"] = dict(data.get("ground", {"kind": "slope"}), grade=args.grade)
    for flag, key in (("frames", "frame_count"), ("density", "density"), ("noise", "noise_sigma")):
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    try:
        spec = scene_spec_from_dict(data, cfg.seed)
    except TypeError as exc:
        raise OccLabelError(f"{args.scene_spec or 'scene spec'}: {exc}") from exc
    scene = generate_scene(spec)
    io.write_ply(scene.cloud, out / "scene.ply")
    io.write_poses(scene.cameras, out / "poses.txt")
    io.write_tracks(scene.tracks, out / "tracks.txt")
    (out / "dynamic").mkdir(exist_ok=True)
    for tid, per in sorted(scene.dynamic_observations.items()):
        for fid, cloud in sorted(per.items()):
            io.write_ply(cloud, out / "dynamic" / f"track_{tid}_frame_{fid}.ply")
    (out / "gt").mkdir(exist_ok=True)
    for cam in scene.cameras:
        grid = oracle_occupancy(scene, cfg.grid.spec_for(cam.camera_center), cam.frame_id)
        io.write_ocv(grid, out / "gt" / f"frame_{cam.frame_id:06d}.ocv")
    io.atomic_write(out / "config.toml", config_mod.dumps(cfg))
    log.info("synth: %d points, %d frames -> %s", len(scene.cloud), len(scene.cameras), out)
    return 0


def read_dynamic_dir(path: Path) -> dict:
    obs: dict = {}
    for f in sorted(path.glob("*.ply")):
        m = _DYNAMIC_NAME.search(f.name)
        if m is None:
            log.warning("%s: name does not match track_T_frame_F.ply, skipped", f)
            continue
        obs.setdefault(int(m.group(1)), {})[int(m.group(2))] = io.read_ply(f)
    return obs


def cmd_divide(args, cfg: PipelineConfig) -> int:
    out = _need_out(args)
    scene = io.read_ply(args.scene)
    frames = io.read_poses(args.poses)
    wanted = set(args.frame) if args.frame else None
    if wanted is not None:
        missing = wanted - {f.frame_id for f in frames}
        if missing:
            raise OccLabelError(f"{args.poses}: no pose for frame(s) {sorted(missing)}")
    static = static_slice(scene, ())
    for cam in frames:
        if wanted is not None and cam.frame_id not in wanted:
            continue
        sweep = divide_frame(static, cam, cfg.range_m, cfg.target_count, cfg.seed, cfg.range_shape)
        io.write_ply(sweep.points, out / f"sweep_{cam.frame_id:06d}.ply")
    return 0


def cmd_aggregate(args, cfg: PipelineConfig) -> int:
    out = _need_out(args)
    boxes = io.read_tracks(args.tracks)
    if args.dynamic is not None:
        obs = read_dynamic_dir(args.dynamic)
    elif args.scene is not None:
        obs = observations_from_cloud(io.read_ply(args.scene), boxes, cfg.box_inflation)
    else:
        raise UsageError("aggregate: need --dynamic or --scene")
    by_track = group_tracks(boxes)
    for tid in sorted(obs):
        if tid not in by_track:
            raise OccLabelError(f"{args.tracks}: no boxes for track {tid}")
        canon = aggregate_track(obs[tid], by_track[tid], cfg.box_inflation)
        io.write_ply(canon, out / f"canonical_track_{tid}.ply")
        log.info("track %d: %d canonical points", tid, len(canon))
    return 0


def _curate_inputs(args):
    scene, poses, tracks, dynamic = args.scene, args.poses, args.tracks, args.dynamic
    if args.input is not None:
        scene = scene or args.input / "scene.ply"
        poses = poses or args.input / "poses.txt"
        tracks = tracks or args.input / "tracks.txt"
        if dynamic is None and (args.input / "dynamic").is_dir():
            dynamic = args.input / "dynamic"
    if scene is None or poses is None:
        raise UsageError("curate: need --input or --scene and --poses")
    return scene, poses, tracks, dynamic


def cmd_curate(args, cfg: PipelineConfig) -> int:
    out = _need_out(args)
    scene_path, poses_path, tracks_path, dynamic = _curate_inputs(args)
    scene = io.read_ply(scene_path)
    cameras = io.read_poses(poses_path)
    tracks = io.read_tracks(tracks_path) if tracks_path is not None and tracks_path.exists() else []
    obs = read_dynamic_dir(dynamic) if dynamic is not None else None
    for fid, grid in curate_sequence(scene, cameras, tracks, cfg, obs):
        io.write_ocv(grid, out / f"frame_{fid:06d}.ocv")
    return 0


def _format_value(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def cmd_eval(args, cfg: PipelineConfig) -> int:
    results = {}
    if args.pred is not None or args.gt is not None:
        if args.pred is None or args.gt is None:
            raise UsageError("eval: --pred and --gt go together")
        try:
            scores = voxel_metrics(io.read_ocv(args.pred), io.read_ocv(args.gt))
        except SpecMismatch as exc:
            raise SpecMismatch(f"{args.pred} vs {args.gt}: {exc}") from exc
        results.update(scores.as_dict())
    if args.pred_ply is not None or args.gt_ply is not None:
        if args.pred_ply is None or args.gt_ply is None:
            raise UsageError("eval: --pred-ply and --gt-ply go together")
        results["chamfer"] = chamfer(io.read_ply(args.pred_ply), io.read_ply(args.gt_ply))
    if not results:
        raise UsageError("eval: nothing to compare")
    lines = [f"{k}={_format_value(v)}" for k, v in results.items()]
    sys.stdout.write("\n".join(lines) + "\n")
    if args.report:
        out = _need_out(args).resolve()
        target = (out / args.report).resolve()
        if out not in target.parents:
            raise UsageError(f"eval: report path {args.report!r} escapes --out")
        io.atomic_write(target, "\n".join(lines) + "\n")
    return 0


def cmd_octree_dump(args, cfg: PipelineConfig) -> int:
    cloud = io.read_ply(args.scene)
    cameras = io.read_poses(args.poses)
    index = build_index(cloud, cameras, cfg.octree())
    text = "\n".join(dump_lines(index)) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        io.atomic_write(_need_out(args) / "octree.txt", text)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "divide": cmd_divide,
    "aggregate": cmd_aggregate,
    "curate": cmd_curate,
    "eval": cmd_eval,
    "octree-dump": cmd_octree_dump,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"{parser.format_usage()}occlabel: error: {exc}\n")
        return 1
    except (OccLabelError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    finally:
        logging.captureWarnings(False)


if __name__ == "__main__":
    sys.exit(main())
