"""Camera and object motion control metrics.

Rotation error is the frame-summed geodesic angle between ground-truth and
generated rotations; translation error the frame-summed Euclidean distance
between translation vectors. Object motion error matches ground-truth and
predicted mean trajectories one-to-one through a penalty-padded assignment
problem and averages per-object distances over the ground-truth objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .camera import CameraPose
from .errors import DomainError, ShapeError
from .gaussians import GaussianTrajectory, to_point_trajectory

# Penalty (meters) filling dummy rows/columns of the padded cost matrix.
DEFAULT_UNMATCHED_PENALTY = 10.0


def rot_err(gt: list, gen: list) -> float:
    """Sum over frames of arccos((tr(R_gen R_gt^T) - 1) / 2), in radians.

    The arccos argument is clamped to [-1, 1]: near-identical rotations
    otherwise produce NaN from floating-point trace error.
    """
    if len(gt) != len(gen):
        raise ShapeError(f"track lengths differ: {len(gt)} vs {len(gen)}")
    if len(gt) < 1:
        raise ShapeError("tracks must contain at least one pose")
    total = 0.0
    for pg, pe in zip(gt, gen):
        tr = float(np.trace(pe.rotation @ pg.rotation.T))
        total += float(np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0)))
    return total


def trans_err(gt: list, gen: list) -> float:
    """Sum over frames of ||t_gt - t_gen||_2, in meters."""
    if len(gt) != len(gen):
        raise ShapeError(f"track lengths differ: {len(gt)} vs {len(gen)}")
    if len(gt) < 1:
        raise ShapeError("tracks must contain at least one pose")
    total = 0.0
    for pg, pe in zip(gt, gen):
        total += float(np.linalg.norm(pg.translation - pe.translation))
    return total


def _mean_track(traj) -> np.ndarray:
    """Accept a GaussianTrajectory or a (T, 3) array of means."""
    if isinstance(traj, GaussianTrajectory):
        return to_point_trajectory(traj)
    arr = np.asarray(traj, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ShapeError(f"mean track must be (T, 3), got {arr.shape}")
    return arr


def trajectory_cost_matrix(gt_trajs: list, pred_trajs: list) -> np.ndarray:
    """d(o, k) = mean over frames of ||pred_mu_k - gt_mu_o||_2."""
    gt = [_mean_track(g) for g in gt_trajs]
    pred = [_mean_track(p) for p in pred_trajs]
    t = gt[0].shape[0] if gt else (pred[0].shape[0] if pred else 0)
    for arr in gt + pred:
        if arr.shape[0] != t:
            raise ShapeError("all trajectories must share the same frame count")
    cost = np.empty((len(gt), len(pred)), dtype=np.float64)
    for o, g in enumerate(gt):
        for k, p in enumerate(pred):
            cost[o, k] = np.linalg.norm(p - g, axis=1).mean()
    return cost


def pad_cost_matrix(cost: np.ndarray, penalty: float) -> np.ndarray:
    """Pad to a square of side max(N_gt, N_pred), dummy entries = penalty."""
    n_gt, n_pred = cost.shape
    side = max(n_gt, n_pred)
    padded = np.full((side, side), penalty, dtype=np.float64)
    padded[:n_gt, :n_pred] = cost
    return padded


def objmc(
    gt_trajs: list,
    pred_trajs: list,
    penalty: float = DEFAULT_UNMATCHED_PENALTY,
):
    """Object motion control error.

    Returns (objmc, matching, per_object_errors) where matching maps each
    ground-truth index to a predicted index or None, and per_object_errors
    holds the matched distance or the penalty for unmatched objects. Spurious
    predictions absorb dummy rows and contribute nothing to the average,
    which runs over ground-truth objects only.
    """
    n_gt, n_pred = len(gt_trajs), len(pred_trajs)
    if n_gt < 1:
        raise DomainError("need at least one ground-truth object")
    cost = trajectory_cost_matrix(gt_trajs, pred_trajs)
    padded = pad_cost_matrix(cost, penalty)
    rows, cols = linear_sum_assignment(padded)
    assignment = dict(zip(rows.tolist(), cols.tolist()))

    matching = []
    per_object = []
    for o in range(n_gt):
        k = assignment[o]
        if k < n_pred:
            matching.append((o, k))
            per_object.append(float(cost[o, k]))
        else:
            matching.append((o, None))
            per_object.append(float(penalty))
    total = 0.0
    for e in per_object:
        total += e
    return total / n_gt, matching, per_object


@dataclass(frozen=True)
class EvalReport:
    rot_err: float    # radians, summed over frames
    trans_err: float  # meters, summed over frames
    objmc: float      # meters, mean over ground-truth objects
    matching: list    # (gt_id, pred_id | None)
    per_object_errors: dict = field(default_factory=dict)  # gt_id -> meters
    frame_count: int = 0
    # Auxiliary per-frame means; headline numbers stay frame-summed.
    rot_err_mean: float = 0.0
    trans_err_mean: float = 0.0

    def to_dict(self) -> dict:
        return {
            "rot_err": self.rot_err,
            "trans_err": self.trans_err,
            "objmc": self.objmc,
            "matching": [
                {"gt_id": g, "pred_id": p} for g, p in self.matching
            ],
            "per_object_errors": self.per_object_errors,
            "frame_count": self.frame_count,
            "rot_err_mean": self.rot_err_mean,
            "trans_err_mean": self.trans_err_mean,
        }

    def to_table(self) -> str:
        rows = [
            ("RotErr (rad, summed)", f"{self.rot_err:.6f}"),
            ("TransErr (m, summed)", f"{self.trans_err:.6f}"),
            ("ObjMC (m, mean)", f"{self.objmc:.6f}"),
        ]
        for (gt_id, pred_id), err in zip(
            self.matching, self.per_object_errors.values()
        ):
            target = pred_id if pred_id is not None else "unmatched"
            rows.append((f"  object {gt_id} -> {target}", f"{err:.6f}"))
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


# ---------------------------------------------------------------------------
# Manifest-level evaluation.
#
# eval.json: {"poses": [{"R": [9], "t": [3]}], "intrinsics": {...},
#             "objects": [{"object_id": str, "mu": [[x,y,z] x T]}]}


def load_eval_manifest(path) -> dict:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"{p}: invalid JSON ({e})") from e
    if "poses" not in doc:
        raise ValueError(f"{p}: manifest has no 'poses'")
    try:
        poses = [CameraPose.from_dict(d) for d in doc["poses"]]
    except (ValueError, KeyError, TypeError) as e:
        raise ValueError(f"{p}: bad pose entry ({e})") from e
    objects = []
    for entry in doc.get("objects", []):
        mu = np.asarray(entry["mu"], dtype=np.float64)
        if mu.ndim != 2 or mu.shape[1] != 3:
            raise ValueError(
                f"{p}: object {entry.get('object_id')!r} means must be (T, 3), "
                f"got {mu.shape}"
            )
        objects.append({"object_id": str(entry["object_id"]), "mu": mu})
    return {"poses": poses, "objects": objects, "intrinsics": doc.get("intrinsics")}


def umeyama_alignment(src: np.ndarray, dst: np.ndarray):
    """Similarity (scale, rotation, translation) minimizing ||dst - (s R src + t)||.

    Standard closed-form least-squares alignment over paired 3-D points.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    cs, cd = src - mu_s, dst - mu_d
    cov = cd.T @ cs / src.shape[0]
    u, s, vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(u @ vt))
    diag = np.diag([1.0, 1.0, d])
    rot = u @ diag @ vt
    var_s = (cs**2).sum() / src.shape[0]
    scale = float(np.trace(np.diag(s) @ diag) / var_s) if var_s > 0 else 1.0
    t = mu_d - scale * rot @ mu_s
    return scale, rot, t


def align_tracks_sim3(gt: list, pred: list) -> list:
    """Align predicted poses to ground truth with a similarity over camera centers."""
    gt_centers = np.stack([-p.rotation.T @ p.translation for p in gt])
    pred_centers = np.stack([-p.rotation.T @ p.translation for p in pred])
    s, q, t = umeyama_alignment(pred_centers, gt_centers)
    aligned = []
    for p, c in zip(pred, pred_centers):
        rot = p.rotation @ q.T
        center = s * q @ c + t
        aligned.append(CameraPose(rot, -rot @ center))
    return aligned


def evaluate_pair(
    gt_manifest,
    pred_manifest,
    penalty: float = DEFAULT_UNMATCHED_PENALTY,
    align: str = "none",
) -> EvalReport:
    """Evaluate a generated-vs-ground-truth manifest pair (paths or parsed dicts).

    Metrics run in the manifests' native metric scale unless ``align='sim3'``
    applies a similarity fit over camera centers first.
    """
    gt = gt_manifest if isinstance(gt_manifest, dict) else load_eval_manifest(gt_manifest)
    pred = (
        pred_manifest if isinstance(pred_manifest, dict) else load_eval_manifest(pred_manifest)
    )
    if len(gt["poses"]) != len(pred["poses"]):
        raise ShapeError(
            f"frame counts differ: gt has {len(gt['poses'])}, pred has {len(pred['poses'])}"
        )
    pred_poses = pred["poses"]
    if align == "sim3":
        pred_poses = align_tracks_sim3(gt["poses"], pred_poses)
    elif align != "none":
        raise ValueError(f"unknown alignment {align!r} (expected 'none' or 'sim3')")

    n = len(gt["poses"])
    r = rot_err(gt["poses"], pred_poses)
    tr = trans_err(gt["poses"], pred_poses)

    gt_ids = [o["object_id"] for o in gt["objects"]]
    if gt["objects"]:
        for o in gt["objects"] + pred["objects"]:
            if o["mu"].shape[0] != n:
                raise ShapeError(
                    f"object {o['object_id']!r} has {o['mu'].shape[0]} frames, poses have {n}"
                )
        score, matching, per_object = objmc(
            [o["mu"] for o in gt["objects"]],
            [o["mu"] for o in pred["objects"]],
            penalty=penalty,
        )
        pred_ids = [o["object_id"] for o in pred["objects"]]
        named = [
            (gt_ids[o], pred_ids[k] if k is not None else None) for o, k in matching
        ]
        errors = {gt_ids[o]: e for (o, _), e in zip(matching, per_object)}
    else:
        score, named, errors = 0.0, [], {}

    return EvalReport(
        rot_err=r,
        trans_err=tr,
        objmc=score,
        matching=named,
        per_object_errors=errors,
        frame_count=n,
        rot_err_mean=r / n,
        trans_err_mean=tr / n,
    )
