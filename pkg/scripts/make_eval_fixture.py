#!/usr/bin/env python3
"""Generate the synthetic evaluation fixture pair plus its expected report.

Writes tests/fixtures/eval/{gt.json,pred.json,expected.json}. Expected values
are computed here with plain loops, independent of the package.
"""

import itertools
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "eval"
T = 9
SEED = 1234
PENALTY = 10.0


def rot_axis_angle(axis, angle):
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    kx = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * (kx @ kx)


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)

    gt_poses = []
    pred_poses = []
    for t in range(T):
        r_gt = rot_axis_angle([0, 1, 0], 0.03 * t)
        t_gt = np.array([0.1 * t, 0.0, 0.02 * t])
        perturb = rot_axis_angle(rng.normal(size=3), float(rng.uniform(0, 0.05)))
        r_pred = perturb @ r_gt
        t_pred = t_gt + rng.normal(size=3) * 0.03
        gt_poses.append({"R": r_gt.reshape(-1).tolist(), "t": t_gt.tolist()})
        pred_poses.append({"R": r_pred.reshape(-1).tolist(), "t": t_pred.tolist()})

    gt_objects = []
    pred_objects = []
    for k in range(3):
        base = rng.normal(size=3) * 2.0 + np.array([0, 0, 8.0])
        vel = rng.normal(size=3) * 0.1
        mu = np.stack([base + vel * t for t in range(T)])
        gt_objects.append({"object_id": f"gt{k}", "mu": mu.tolist()})
        if k < 2:  # drop one object so the penalty term is exercised
            noise = rng.normal(size=(T, 3)) * 0.05
            pred_objects.append({"object_id": f"pred{k}", "mu": (mu + noise).tolist()})

    gt = {"poses": gt_poses, "objects": gt_objects}
    pred = {"poses": pred_poses, "objects": pred_objects}

    # --- expected values, computed independently -------------------------
    rot_err = 0.0
    trans_err = 0.0
    for pg, pe in zip(gt_poses, pred_poses):
        rg = np.array(pg["R"]).reshape(3, 3)
        re_ = np.array(pe["R"]).reshape(3, 3)
        tr = np.trace(re_ @ rg.T)
        rot_err += math.acos(max(-1.0, min(1.0, (tr - 1.0) / 2.0)))
        trans_err += float(
            np.linalg.norm(np.array(pg["t"]) - np.array(pe["t"]))
        )

    n_gt, n_pred = len(gt_objects), len(pred_objects)
    cost = np.zeros((n_gt, n_pred))
    for o in range(n_gt):
        for k in range(n_pred):
            mu_o = np.array(gt_objects[o]["mu"])
            mu_k = np.array(pred_objects[k]["mu"])
            cost[o, k] = np.linalg.norm(mu_k - mu_o, axis=1).mean()
    side = max(n_gt, n_pred)
    padded = np.full((side, side), PENALTY)
    padded[:n_gt, :n_pred] = cost
    best = None
    best_perm = None
    for perm in itertools.permutations(range(side)):
        total = sum(padded[r, perm[r]] for r in range(side))
        if best is None or total < best:
            best, best_perm = total, perm
    per_object = {}
    matching = []
    acc = 0.0
    for o in range(n_gt):
        k = best_perm[o]
        if k < n_pred:
            matching.append([gt_objects[o]["object_id"], pred_objects[k]["object_id"]])
            per_object[gt_objects[o]["object_id"]] = float(cost[o, k])
        else:
            matching.append([gt_objects[o]["object_id"], None])
            per_object[gt_objects[o]["object_id"]] = PENALTY
        acc += per_object[gt_objects[o]["object_id"]]
    objmc = acc / n_gt

    expected = {
        "penalty": PENALTY,
        "frame_count": T,
        "rot_err": rot_err,
        "trans_err": trans_err,
        "objmc": objmc,
        "matching": matching,
        "per_object_errors": per_object,
    }

    (OUT / "gt.json").write_text(json.dumps(gt, indent=2))
    (OUT / "pred.json").write_text(json.dumps(pred, indent=2))
    (OUT / "expected.json").write_text(json.dumps(expected, indent=2))
    print(f"wrote fixture to {OUT}: rot={rot_err:.6f} trans={trans_err:.6f} objmc={objmc:.6f}")


if __name__ == "__main__":
    main()
