// 3-D viewport projection: camera path and ellipsoid wireframes drawn with
// the same world-to-camera convention as the server (x_cam = R x + t,
// u = fx x / z + cx), so screen-space gizmo anchors line up with rendered
// footprints.

import { ellipsoidFromKeyframe, type EllipsoidHandle } from "./gizmo.js";
import { matVec, transpose, vadd, vscale, vsub } from "./math.js";
import type { Intrinsics, KeyframeJson, PoseJson, Vec3 } from "./types.js";

export interface ScreenPoint {
  x: number;
  y: number;
  depth: number;
}

export function projectPoint(
  point: Vec3,
  intrinsics: Intrinsics,
  pose: PoseJson,
): ScreenPoint | null {
  const cam = vadd(matVec(pose.R, point), pose.t);
  if (cam[2] <= 0) return null;
  return {
    x: (intrinsics.fx * cam[0]) / cam[2] + intrinsics.cx,
    y: (intrinsics.fy * cam[1]) / cam[2] + intrinsics.cy,
    depth: cam[2],
  };
}

export function cameraCenter(pose: PoseJson): Vec3 {
  return vscale(matVec(transpose(pose.R), pose.t), -1);
}

/** Camera path: every pose's optical center projected into the view pose. */
export function cameraPathScreen(
  poses: PoseJson[],
  intrinsics: Intrinsics,
  viewPose: PoseJson,
): (ScreenPoint | null)[] {
  return poses.map((p) => projectPoint(cameraCenter(p), intrinsics, viewPose));
}

export interface EllipsoidScreen {
  center: ScreenPoint | null;
  rings: (ScreenPoint | null)[][];
}

export function ellipsoidScreen(
  key: KeyframeJson,
  intrinsics: Intrinsics,
  viewPose: PoseJson,
  segments = 24,
): EllipsoidScreen {
  const handle = ellipsoidFromKeyframe(key);
  return {
    center: projectPoint(handle.center, intrinsics, viewPose),
    rings: ringPoints(handle, segments).map((ring) =>
      ring.map((p) => projectPoint(p, intrinsics, viewPose)),
    ),
  };
}

function ringPoints(handle: EllipsoidHandle, segments: number): Vec3[][] {
  const planes: [number, number][] = [
    [0, 1],
    [0, 2],
    [1, 2],
  ];
  return planes.map(([i, j]) => {
    const ring: Vec3[] = [];
    for (let s = 0; s <= segments; s++) {
      const t = (2 * Math.PI * s) / segments;
      const local: Vec3 = [0, 0, 0];
      local[i] = Math.cos(t) * handle.halfExtents[i];
      local[j] = Math.sin(t) * handle.halfExtents[j];
      ring.push(vadd(handle.center, matVec(handle.axes, local)));
    }
    return ring;
  });
}

/** Pixel drag to world-space translation on the plane through the object. */
export function dragDeltaToWorld(
  dxPixels: number,
  dyPixels: number,
  depth: number,
  intrinsics: Intrinsics,
  viewPose: PoseJson,
): Vec3 {
  const camDelta: Vec3 = [
    (dxPixels * depth) / intrinsics.fx,
    (dyPixels * depth) / intrinsics.fy,
    0,
  ];
  return vsub(matVec(transpose(viewPose.R), camDelta), [0, 0, 0]);
}
