import { describe, expect, it } from "vitest";

import { ellipsoidScreen, cameraCenter, dragDeltaToWorld, projectPoint } from "../src/viewport.js";
import type { Intrinsics, Mat3, PoseJson, Vec3 } from "../src/types.js";

const EYE: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];
const K: Intrinsics = { fx: 80, fy: 80, cx: 48, cy: 32, width: 96, height: 64 };
const identity: PoseJson = { R: [...EYE] as Mat3, t: [0, 0, 0] };

describe("projectPoint", () => {
  it("matches the pinhole formula (u = fx x / z + cx)", () => {
    const p = projectPoint([1, 0.5, 4], K, identity)!;
    expect(p.x).toBeCloseTo((80 * 1) / 4 + 48, 12);
    expect(p.y).toBeCloseTo((80 * 0.5) / 4 + 32, 12);
    expect(p.depth).toBe(4);
  });

  it("culls points behind the camera", () => {
    expect(projectPoint([0, 0, -1], K, identity)).toBeNull();
  });

  it("applies world-to-camera translation like the server", () => {
    const pose: PoseJson = { R: [...EYE] as Mat3, t: [0, 0, -1] };
    // x_cam = x_world + t -> depth 3 for a point at z = 4
    const p = projectPoint([0, 0, 4], K, pose)!;
    expect(p.depth).toBeCloseTo(3, 12);
  });
});

describe("cameraCenter", () => {
  it("is -R^T t", () => {
    const pose: PoseJson = { R: [...EYE] as Mat3, t: [1, 2, 3] };
    const c = cameraCenter(pose);
    expect(c[0]).toBeCloseTo(-1, 12);
    expect(c[1]).toBeCloseTo(-2, 12);
    expect(c[2]).toBeCloseTo(-3, 12);
  });
});

describe("ellipsoidScreen", () => {
  it("projects the handle center onto the mean's pixel", () => {
    const screen = ellipsoidScreen(
      { frame: 1, mu: [0.5, -0.25, 5] as Vec3, sigma: [...EYE] as Mat3 },
      K,
      identity,
    );
    expect(screen.center).not.toBeNull();
    expect(screen.center!.x).toBeCloseTo((80 * 0.5) / 5 + 48, 9);
    expect(screen.center!.y).toBeCloseTo((80 * -0.25) / 5 + 32, 9);
    expect(screen.rings).toHaveLength(3);
  });
});

describe("dragDeltaToWorld", () => {
  it("round-trips a screen drag at the object depth", () => {
    const depth = 5;
    const delta = dragDeltaToWorld(16, 0, depth, K, identity);
    // 16 px at fx=80, z=5 -> 1 m sideways
    expect(delta[0]).toBeCloseTo(1, 12);
    const before = projectPoint([0, 0, depth], K, identity)!;
    const after = projectPoint([delta[0], delta[1], depth], K, identity)!;
    expect(after.x - before.x).toBeCloseTo(16, 9);
  });
});
