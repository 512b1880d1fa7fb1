"""Command-line interface.

Subcommands: init (build a scene from annotated first frame), render (export
control maps), pack (fold exported masks into a .gt4d tensor), eval (compare
camera tracks and object trajectories), filter (apply dataset curation rules),
serve (run the editing service).

Exit codes: 0 success, 2 usage, 3 validation/domain error, 4 missing or
unreadable input, 1 unexpected failure. With --json, errors are emitted as a
JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, formats
from .camera import CameraIntrinsics, CameraPose, CameraTrack, DepthMap, load_intrinsics, load_poses
from .curation import FilterThresholds, extract_clip, filter_clip, load_records
from .errors import (
    BoundsError,
    DomainError,
    EmptyObjectError,
    ManifestError,
    ShapeError,
)
from .metrics import evaluate_pair
from .packing import StrideConfig, load_mask_sequence, rearrange_mask
from .render import RenderMode, RenderSettings, export_control_sequence
from .scene import InstanceMask, build_scene, load_scene, save_scene

EXIT_VALIDATION = 3
EXIT_INPUT = 4


def load_instance_masks(path, labels: dict | None = None) -> list:
    """Instance-id coded PNG (0 = background) to InstanceMask list."""
    ids = formats.read_png(path)
    if ids.ndim != 2:
        raise ShapeError(f"{path}: instance mask PNG must be single-channel")
    labels = labels or {}
    masks = []
    for oid in np.unique(ids):
        if oid == 0:
            continue
        key = str(int(oid))
        masks.append(
            InstanceMask(object_id=key, pixels=ids == oid, label=labels.get(key, ""))
        )
    return masks


def _cmd_init(args) -> int:
    image = formats.read_png(args.image)
    depth = DepthMap.from_array(formats.read_pfm(args.depth))
    labels = None
    if args.labels:
        labels = json.loads(Path(args.labels).read_text(encoding="utf-8"))
    masks = load_instance_masks(args.masks, labels)
    intrinsics = load_intrinsics(args.intrinsics)
    pose = CameraPose.identity()
    if args.pose:
        pose = load_poses(args.pose)[0]
    scene = build_scene(image, depth, masks, intrinsics, pose)
    save_scene(scene, args.output)
    print(
        f"scene written to {args.output}: {len(scene.background)} background points, "
        f"{len(scene.objects)} objects"
    )
    return 0


def _cmd_render(args) -> int:
    scene = load_scene(args.scene)
    if args.camera:
        poses = load_poses(args.camera)
        scene = scene.with_camera(CameraTrack(scene.camera.intrinsics, tuple(poses)))
    mode = RenderMode.parse(args.mode)
    settings = RenderSettings(splat_radius=args.radius)
    paths = export_control_sequence(
        scene, mode, args.output, settings=settings, workers=args.workers
    )
    print(f"wrote {len(paths)} files for {scene.frame_count} frames to {args.output}")
    return 0


def _cmd_pack(args) -> int:
    s_t, s_h, s_w = (int(v) for v in args.strides.split(","))
    strides = StrideConfig(s_t=s_t, s_h=s_h, s_w=s_w)
    mask = load_mask_sequence(args.mask_dir)
    packed = rearrange_mask(mask, strides)
    formats.write_gt4d(args.output, packed.tensor)
    c, t, h, w = packed.shape
    print(f"packed {mask.shape[1]} frames -> {c}x{t}x{h}x{w} at {args.output}")
    return 0


def _cmd_eval(args) -> int:
    report = evaluate_pair(
        args.gt, args.pred, penalty=args.penalty, align=args.align
    )
    if args.json_report:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_table())
    if args.output:
        Path(args.output).write_text(
            json.dumps(report.to_dict(), indent=2), encoding="utf-8"
        )
    return 0


def _cmd_extract(args) -> int:
    shots = json.loads(Path(args.shots).read_text(encoding="utf-8"))
    rng = np.random.default_rng(args.seed) if args.sample == "random" else None
    spans = {}
    kept = 0
    for shot in shots:
        span = extract_clip(int(shot["length"]), policy=args.sample, rng=rng)
        spans[str(shot["shot_id"])] = list(span) if span else None
        kept += span is not None
    out = json.dumps(spans, indent=2)
    if args.output:
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        print(out)
    print(f"{kept}/{len(shots)} shots long enough", file=sys.stderr)
    return 0


def _cmd_filter(args) -> int:
    thresholds = FilterThresholds.from_toml(args.config) if args.config else FilterThresholds()
    records = load_records(args.records)
    verdicts = {}
    accepted = 0
    for rec in records:
        v = filter_clip(rec, thresholds)
        verdicts[rec.clip_id] = v.to_dict()
        accepted += v.accepted
    out = json.dumps(verdicts, indent=2)
    if args.output:
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        print(out)
    print(f"{accepted}/{len(records)} clips accepted", file=sys.stderr)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SceneService, create_app

    service = SceneService()
    for scene_dir in args.scenes:
        sid = service.load_scene_dir(scene_dir)
        print(f"loaded {scene_dir} as scene {sid}")
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctrl4d",
        description="Build, edit, render, pack, and evaluate 4D scene control states.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--json", action="store_true", help="emit errors as JSON on stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="build a scene from an annotated first frame")
    p.add_argument("image", help="first frame PNG")
    p.add_argument("depth", help="depth map PFM (holes as +inf or <= 0)")
    p.add_argument("masks", help="instance-id coded PNG (0 = background)")
    p.add_argument("intrinsics", help="intrinsics JSON")
    p.add_argument("--pose", help="initial pose JSON (frame array; default identity)")
    p.add_argument("--labels", help="JSON mapping instance id -> label")
    p.add_argument("-o", "--output", required=True, help="scene directory to create")
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("render", help="render and export control maps")
    p.add_argument("scene", help="scene directory")
    p.add_argument(
        "--mode",
        default="joint",
        choices=[m.value for m in RenderMode],
    )
    p.add_argument("--camera", help="replace the camera track with this pose JSON")
    p.add_argument("--radius", type=float, default=RenderSettings().splat_radius,
                   help="world-space splat radius in meters")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("pack", help="fold exported masks into a .gt4d tensor")
    p.add_argument("mask_dir", help="directory holding mask_%%04d.png files")
    p.add_argument("--strides", default="4,8,8", help="s_t,s_h,s_w")
    p.add_argument("-o", "--output", required=True, help="output .gt4d path")
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("eval", help="compare a generated manifest against ground truth")
    p.add_argument("gt", help="ground-truth eval.json")
    p.add_argument("pred", help="predicted eval.json")
    p.add_argument("--lambda", dest="penalty", type=float, default=10.0,
                   help="unmatched-object penalty in meters")
    p.add_argument("--align", choices=["none", "sim3"], default="none",
                   help="similarity-align predicted camera track first")
    p.add_argument("--json", dest="json_report", action="store_true",
                   help="print the report as JSON instead of a table")
    p.add_argument("-o", "--output", help="also write report JSON here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("extract", help="pick 81-frame spans from detected shots")
    p.add_argument("shots", help='JSON list of {"shot_id", "length"}')
    p.add_argument("--sample", choices=["center", "random"], default="center")
    p.add_argument("--seed", type=int, default=0, help="rng seed for --sample random")
    p.add_argument("-o", "--output", help="spans JSON path (default stdout)")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("filter", help="apply curation rules to clip records")
    p.add_argument("records", help="records JSON")
    p.add_argument("--config", help="thresholds TOML")
    p.add_argument("-o", "--output", help="verdicts JSON path (default stdout)")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("serve", help="run the local editing service")
    p.add_argument("scenes", nargs="*", help="scene directories to preload")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def _fail(args, code: int, kind: str, err: Exception) -> int:
    if getattr(args, "json", False):
        print(
            json.dumps({"error": kind, "message": str(err), "exit_code": code}),
            file=sys.stderr,
        )
    else:
        print(f"error: {err}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ManifestError, json.JSONDecodeError) as e:
        return _fail(args, EXIT_INPUT, "input", e)
    except (ShapeError, DomainError, BoundsError, EmptyObjectError, ValueError) as e:
        return _fail(args, EXIT_VALIDATION, "validation", e)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
