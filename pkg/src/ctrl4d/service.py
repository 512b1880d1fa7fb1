"""Local HTTP/JSON editing service: the backend for the trajectory editor.

Versioned under /v1. Scenes are held in memory as immutable snapshots; every
mutation carries the client's last-known revision and is rejected with 409 on
mismatch (optimistic concurrency, single writer per scene). Renders read a
snapshot, so in-flight previews are never invalidated mid-frame. Localhost
authoring tool: no auth by design.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, File, HTTPException, Query, UploadFile
from PIL import Image

from . import __version__, formats
from .camera import CameraIntrinsics, CameraPose, CameraTrack, DepthMap
from .errors import BoundsError, EmptyObjectError, ShapeError
from .gaussians import Gaussian3, KeyframeTrack, keyframes_to_json
from .metrics import evaluate_pair, load_eval_manifest
from .raster import footprint_stats, splat_points
from .render import (
    DEFAULT_SETTINGS,
    RenderMode,
    build_control_mask,
    export_control_sequence,
    render_gaussian_frame,
    scale_scene,
)
from .scene import SceneState, build_scene, load_scene, save_scene

PREVIEW_SCALE = 0.5


def _digest(*parts: bytes) -> str:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(p)
    return h.hexdigest()


def _camera_digest(scene: SceneState) -> str:
    parts = [json.dumps(scene.camera.intrinsics.to_dict()).encode()]
    for p in scene.camera.poses:
        parts.append(p.rotation.tobytes())
        parts.append(p.translation.tobytes())
    return _digest(*parts)


def _trajectory_digest(scene: SceneState) -> str:
    parts = []
    for o in scene.objects:
        parts.append(o.object_id.encode())
        parts.append(o.color.tobytes())
        for g in o.trajectory.frames:
            parts.append(g.mean.tobytes())
            parts.append(g.cov.tobytes())
    return _digest(*parts)


@dataclass
class SceneSession:
    """One editable scene: immutable state snapshots plus a revision counter."""

    scene_id: str
    state: SceneState
    revision: int = 0
    dirty_frames: set = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)
    # channel caches keyed by content digests, so an object edit reuses
    # background renders and vice versa (incremental re-render correctness
    # comes from the digests, not from the dirty bookkeeping)
    bg_cache: dict = field(default_factory=dict)
    traj_cache: dict = field(default_factory=dict)
    scaled: dict = field(default_factory=dict)

    def mutate(self, revision: int, fn):
        with self.lock:
            if revision != self.revision:
                raise RevisionError(self.revision, revision)
            self.state = fn(self.state)
            self.revision += 1
            self.dirty_frames = set(range(1, self.state.frame_count + 1))
            self._trim_caches()
            return self.revision

    def _trim_caches(self):
        for cache in (self.bg_cache, self.traj_cache):
            while len(cache) > 512:
                cache.pop(next(iter(cache)))

    def scene_at_scale(self, scale: float) -> SceneState:
        if scale == 1.0:
            return self.state
        key = (_camera_digest(self.state), _trajectory_digest(self.state),
               _digest(self.state.first_frame_image.tobytes()), scale)
        if key not in self.scaled:
            self.scaled.clear()
            self.scaled[key] = scale_scene(self.state, scale)
        return self.scaled[key]


class RevisionError(Exception):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"stale revision {got}, server is at {expected}")


class SceneService:
    """Session registry shared by the HTTP app and the CLI `serve` command."""

    def __init__(self):
        self.sessions: dict[str, SceneSession] = {}
        self.export_root = Path(tempfile.gettempdir()) / "ctrl4d_exports"

    def load_scene_dir(self, path) -> str:
        scene = load_scene(path)
        return self.add_scene(scene, scene_id=Path(path).resolve().name)

    def add_scene(self, scene: SceneState, scene_id: str | None = None) -> str:
        sid = scene_id or uuid.uuid4().hex[:12]
        if sid in self.sessions:
            sid = f"{sid}-{uuid.uuid4().hex[:6]}"
        self.sessions[sid] = SceneSession(scene_id=sid, state=scene)
        return sid

    def get(self, scene_id: str) -> SceneSession:
        try:
            return self.sessions[scene_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown scene {scene_id!r}")


def _scene_summary(session: SceneSession) -> dict:
    scene = session.state
    return {
        "scene_id": session.scene_id,
        "revision": session.revision,
        "frame_count": scene.frame_count,
        "intrinsics": scene.camera.intrinsics.to_dict(),
        "poses": [p.to_dict() for p in scene.camera.poses],
        "background_points": len(scene.background),
        "dirty_frames": sorted(session.dirty_frames),
        "objects": [
            {
                "object_id": o.object_id,
                "label": o.label,
                "color": o.color.tolist(),
                "cloud_points": len(o.cloud),
                "keys": [{"frame": f, **g.to_dict()} for f, g in o.keyframes.keys],
            }
            for o in scene.objects
        ],
    }


def _png_b64(arr_u8: np.ndarray) -> str:
    buf = io.BytesIO()
    mode = "L" if arr_u8.ndim == 2 else "RGB"
    Image.fromarray(arr_u8, mode=mode).save(buf, format="PNG", optimize=False)
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _parse_keys(payload: dict, frame_count: int) -> KeyframeTrack:
    keys = payload.get("keys")
    if not isinstance(keys, list) or not keys:
        raise HTTPException(422, detail={"loc": ["keys"], "msg": "non-empty list required"})
    parsed = []
    for i, entry in enumerate(keys):
        try:
            frame = int(entry["frame"])
        except (KeyError, TypeError, ValueError):
            raise HTTPException(422, detail={"loc": ["keys", i, "frame"], "msg": "integer frame required"})
        if not 1 <= frame <= frame_count:
            raise HTTPException(
                422,
                detail={"loc": ["keys", i, "frame"], "msg": f"frame {frame} outside [1, {frame_count}]"},
            )
        try:
            g = Gaussian3(
                np.asarray(entry["mu"], dtype=np.float64),
                np.asarray(entry["sigma"], dtype=np.float64).reshape(3, 3),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise HTTPException(422, detail={"loc": ["keys", i], "msg": str(e)})
        parsed.append((frame, g))
    try:
        return KeyframeTrack(tuple(parsed))
    except (ValueError, BoundsError) as e:
        raise HTTPException(422, detail={"loc": ["keys"], "msg": str(e)})


def _render_channels(session: SceneSession, scene: SceneState, frame: int,
                     mode: RenderMode, scale: float):
    """Channel renders with digest-keyed caching (bg and traj independently)."""
    K = scene.camera.intrinsics
    camera = scene.camera.constant() if mode is RenderMode.OBJECT_ONLY else scene.camera
    pose = camera.pose_at(frame)
    cam_key = (_camera_digest(scene), mode is RenderMode.OBJECT_ONLY, frame, scale)
    if cam_key not in session.bg_cache:
        session.bg_cache[cam_key] = splat_points(
            scene.background.points, scene.background.colors, K, pose,
            radius=DEFAULT_SETTINGS.splat_radius,
        )
    bg_rgb, bg_depth = session.bg_cache[cam_key]

    if mode is RenderMode.CAMERA_ONLY or not scene.objects:
        traj_rgb = np.zeros((K.height, K.width, 3), dtype=np.float32)
        alpha = np.zeros((K.height, K.width))
    else:
        traj_key = (_trajectory_digest(scene),) + cam_key
        if traj_key not in session.traj_cache:
            session.traj_cache[traj_key] = render_gaussian_frame(
                scene, frame, pose, DEFAULT_SETTINGS
            )
        traj_rgb, _, alpha = session.traj_cache[traj_key]

    if frame == 1:
        bg_rgb = scene.first_frame_image.astype(np.float32) / 255.0
        mask = np.zeros((K.height, K.width), dtype=np.float32)
    else:
        mask = build_control_mask(bg_depth.validity, alpha, DEFAULT_SETTINGS)
    return bg_rgb, traj_rgb, mask, pose


def create_app(service: SceneService | None = None) -> FastAPI:
    service = service or SceneService()
    app = FastAPI(title="ctrl4d control service", version=__version__)
    app.state.service = service

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/v1/scenes")
    def list_scenes():
        return {"scenes": [_scene_summary(s) for s in service.sessions.values()]}

    @app.post("/v1/scenes")
    async def create_scene(
        image: UploadFile = File(...),
        depth: UploadFile = File(...),
        masks: UploadFile = File(...),
        intrinsics: UploadFile = File(...),
        labels: UploadFile | None = File(None),
        pose: UploadFile | None = File(None),
    ):
        from .cli import load_instance_masks

        try:
            img = np.asarray(Image.open(io.BytesIO(await image.read())).convert("RGB"))
            with tempfile.NamedTemporaryFile(suffix=".pfm") as f:
                f.write(await depth.read())
                f.flush()
                depth_map = DepthMap.from_array(formats.read_pfm(f.name))
            label_map = json.loads((await labels.read()).decode()) if labels else None
            with tempfile.NamedTemporaryFile(suffix=".png") as f:
                f.write(await masks.read())
                f.flush()
                mask_list = load_instance_masks(f.name, label_map)
            K = CameraIntrinsics.from_dict(json.loads((await intrinsics.read()).decode()))
            p1 = CameraPose.identity()
            if pose:
                frames = json.loads((await pose.read()).decode())
                p1 = CameraPose.from_dict(frames[0] if isinstance(frames, list) else frames)
            scene = build_scene(img, depth_map, mask_list, K, p1)
        except (ShapeError, EmptyObjectError, ValueError) as e:
            raise HTTPException(422, detail={"loc": ["body"], "msg": str(e)})
        sid = service.add_scene(scene)
        return _scene_summary(service.get(sid))

    @app.get("/v1/scenes/{scene_id}")
    def get_scene(scene_id: str):
        return _scene_summary(service.get(scene_id))

    @app.get("/v1/scenes/{scene_id}/objects/{object_id}/keyframes")
    def get_keyframes(scene_id: str, object_id: str):
        session = service.get(scene_id)
        try:
            obj = session.state.get_object(object_id)
        except KeyError:
            raise HTTPException(404, detail=f"unknown object {object_id!r}")
        doc = keyframes_to_json(obj.object_id, obj.color, obj.keyframes)
        doc["revision"] = session.revision
        return doc

    @app.put("/v1/scenes/{scene_id}/camera")
    def put_camera(scene_id: str, payload: dict = Body(...)):
        session = service.get(scene_id)
        revision = payload.get("revision")
        if not isinstance(revision, int):
            raise HTTPException(422, detail={"loc": ["revision"], "msg": "integer required"})
        poses_raw = payload.get("poses")
        if not isinstance(poses_raw, list) or not poses_raw:
            raise HTTPException(422, detail={"loc": ["poses"], "msg": "non-empty list required"})
        try:
            poses = tuple(CameraPose.from_dict(d) for d in poses_raw)
            K = session.state.camera.intrinsics
            if "intrinsics" in payload and payload["intrinsics"] is not None:
                K = CameraIntrinsics.from_dict(payload["intrinsics"])
            track = CameraTrack(K, poses)
        except (ValueError, KeyError, TypeError, ShapeError) as e:
            raise HTTPException(422, detail={"loc": ["poses"], "msg": str(e)})
        try:
            new_rev = session.mutate(revision, lambda s: s.with_camera(track))
        except RevisionError as e:
            raise HTTPException(409, detail={"expected": e.expected, "got": e.got})
        except (BoundsError, ShapeError, ValueError) as e:
            raise HTTPException(422, detail={"loc": ["poses"], "msg": str(e)})
        return {"scene_id": scene_id, "revision": new_rev,
                "frame_count": session.state.frame_count}

    @app.put("/v1/scenes/{scene_id}/objects/{object_id}/keyframes")
    def put_keyframes(scene_id: str, object_id: str, payload: dict = Body(...)):
        session = service.get(scene_id)
        revision = payload.get("revision")
        if not isinstance(revision, int):
            raise HTTPException(422, detail={"loc": ["revision"], "msg": "integer required"})
        track = _parse_keys(payload, session.state.frame_count)
        color = payload.get("color")
        try:
            session.state.get_object(object_id)
        except KeyError:
            raise HTTPException(404, detail=f"unknown object {object_id!r}")
        try:
            new_rev = session.mutate(
                revision, lambda s: s.with_keyframes(object_id, track, color=color)
            )
        except RevisionError as e:
            raise HTTPException(409, detail={"expected": e.expected, "got": e.got})
        except (BoundsError, ShapeError, ValueError) as e:
            raise HTTPException(422, detail={"loc": ["keys"], "msg": str(e)})
        return {"scene_id": scene_id, "revision": new_rev, "object_id": object_id}

    @app.post("/v1/scenes/{scene_id}/render")
    def render_preview(
        scene_id: str,
        frame: int = Query(..., ge=1),
        mode: str = Query("joint"),
        full: int = Query(0),
    ):
        session = service.get(scene_id)
        try:
            render_mode = RenderMode.parse(mode)
        except ValueError as e:
            raise HTTPException(422, detail={"loc": ["mode"], "msg": str(e)})
        if frame > session.state.frame_count:
            raise HTTPException(
                422,
                detail={"loc": ["frame"],
                        "msg": f"frame {frame} outside [1, {session.state.frame_count}]"},
            )
        scale = 1.0 if full else PREVIEW_SCALE
        scene = session.scene_at_scale(scale)
        bg_rgb, traj_rgb, mask, pose = _render_channels(
            session, scene, frame, render_mode, scale
        )
        K = scene.camera.intrinsics
        if render_mode is RenderMode.CAMERA_ONLY:
            stats = []
        else:
            gaussians = [o.trajectory.at(frame) for o in scene.objects]
            stats = footprint_stats(gaussians, K, pose)
        session.dirty_frames.discard(frame)
        return {
            "scene_id": scene_id,
            "revision": session.revision,
            "frame": frame,
            "mode": render_mode.value,
            "width": K.width,
            "height": K.height,
            "scale": scale,
            "images": {
                "bg_rgb": _png_b64(formats.quantize_unit(bg_rgb)),
                "traj_rgb": _png_b64(formats.quantize_unit(traj_rgb)),
                "mask": _png_b64(formats.quantize_unit(mask)),
            },
            "mask_stats": {"sum": float(mask.sum()), "max": float(mask.max())},
            "footprints": [
                {
                    "object_id": scene.objects[s.index].object_id,
                    "visible": s.visible,
                    "center": [s.center[0], s.center[1]],
                    "center_depth": s.center_depth,
                    "alpha_sum": s.alpha_sum,
                    "alpha_centroid": list(s.alpha_centroid) if s.alpha_centroid else None,
                }
                for s in stats
            ],
        }

    @app.post("/v1/scenes/{scene_id}/export")
    def export_scene(scene_id: str, payload: dict = Body(default={})):
        session = service.get(scene_id)
        mode = RenderMode.parse(payload.get("mode", "joint"))
        out_dir = payload.get("out_dir")
        if out_dir is None:
            out_dir = service.export_root / scene_id / mode.value
        workers = int(payload.get("workers", 1))
        paths = export_control_sequence(
            session.state, mode, out_dir, workers=workers
        )
        if payload.get("save_scene"):
            save_scene(session.state, Path(out_dir) / "scene")
        return {"scene_id": scene_id, "revision": session.revision,
                "out_dir": str(out_dir), "paths": paths}

    def _manifest_from(value) -> dict:
        """Accept an inline manifest document or a server-side path."""
        if isinstance(value, str):
            return load_eval_manifest(value)
        return {
            "poses": [CameraPose.from_dict(p) for p in value["poses"]],
            "objects": [
                {
                    "object_id": str(o["object_id"]),
                    "mu": np.asarray(o["mu"], dtype=np.float64),
                }
                for o in value.get("objects", [])
            ],
        }

    @app.post("/v1/eval")
    def eval_pair(payload: dict = Body(...)):
        try:
            gt = _manifest_from(payload["gt"])
            pred = _manifest_from(payload["pred"])
            report = evaluate_pair(
                gt, pred,
                penalty=float(payload.get("penalty", 10.0)),
                align=payload.get("align", "none"),
            )
        except (KeyError, TypeError, ValueError, ShapeError, FileNotFoundError) as e:
            raise HTTPException(422, detail={"loc": ["body"], "msg": str(e)})
        return report.to_dict()

    return app
