// Ellipsoid gizmo math: keyframes are edited through an ellipsoid handle
// whose surface sits at ISO_SCALE standard deviations, matching the surface
// the server renders depth from. Translating moves the mean; rotating and
// scaling rework the covariance through its eigendecomposition.

import {
  axisAngle,
  composeSymmetric,
  matMul,
  matVec,
  symmetricEigen,
  transpose,
  vadd,
} from "./math.js";
import type { KeyframeJson, Mat3, Vec3 } from "./types.js";

// Shared with the server: ellipsoid iso-surface at 2 sigma per axis.
export const ISO_SCALE = 2;

export interface EllipsoidHandle {
  center: Vec3;
  axes: Mat3; // columns = principal directions, right-handed
  halfExtents: Vec3; // ISO_SCALE * sqrt(eigenvalue)
}

export function ellipsoidFromKeyframe(key: KeyframeJson, k: number = ISO_SCALE): EllipsoidHandle {
  const { values, axes } = symmetricEigen(key.sigma);
  return {
    center: [...key.mu] as Vec3,
    axes,
    halfExtents: [
      k * Math.sqrt(Math.max(values[0], 0)),
      k * Math.sqrt(Math.max(values[1], 0)),
      k * Math.sqrt(Math.max(values[2], 0)),
    ],
  };
}

export function keyframeFromEllipsoid(
  frame: number,
  handle: EllipsoidHandle,
  k: number = ISO_SCALE,
): KeyframeJson {
  const values: Vec3 = [
    (handle.halfExtents[0] / k) ** 2,
    (handle.halfExtents[1] / k) ** 2,
    (handle.halfExtents[2] / k) ** 2,
  ];
  return {
    frame,
    mu: [...handle.center] as Vec3,
    sigma: composeSymmetric(handle.axes, values),
  };
}

/** Drag: move the mean by a world-space delta; covariance untouched. */
export function translateKeyframe(key: KeyframeJson, delta: Vec3): KeyframeJson {
  return { frame: key.frame, mu: vadd(key.mu, delta), sigma: [...key.sigma] as Mat3 };
}

/**
 * Scale handle on one principal axis: half extent scales by `factor`, so the
 * matching covariance eigenvalue scales by factor^2.
 */
export function scaleKeyframe(key: KeyframeJson, axisIndex: 0 | 1 | 2, factor: number): KeyframeJson {
  if (factor <= 0) throw new Error(`scale factor must be positive, got ${factor}`);
  const handle = ellipsoidFromKeyframe(key);
  handle.halfExtents[axisIndex] *= factor;
  return keyframeFromEllipsoid(key.frame, handle);
}

/** Rotate the ellipsoid about a world axis through its center. */
export function rotateKeyframe(key: KeyframeJson, axis: Vec3, angle: number): KeyframeJson {
  const r = axisAngle(axis, angle);
  const sigma = matMul(matMul(r, key.sigma), transpose(r));
  // exact symmetrization: tiny drift would otherwise be rejected server-side
  const sym: Mat3 = [
    sigma[0], (sigma[1] + sigma[3]) / 2, (sigma[2] + sigma[6]) / 2,
    (sigma[1] + sigma[3]) / 2, sigma[4], (sigma[5] + sigma[7]) / 2,
    (sigma[2] + sigma[6]) / 2, (sigma[5] + sigma[7]) / 2, sigma[8],
  ];
  return { frame: key.frame, mu: [...key.mu] as Vec3, sigma: sym };
}

/** Sampled outline points of the handle's surface (for canvas drawing). */
export function ellipsoidWireframe(handle: EllipsoidHandle, segments = 24): Vec3[][] {
  const rings: Vec3[][] = [];
  const planes: [number, number][] = [
    [0, 1],
    [0, 2],
    [1, 2],
  ];
  for (const [i, j] of planes) {
    const ring: Vec3[] = [];
    for (let s = 0; s <= segments; s++) {
      const t = (2 * Math.PI * s) / segments;
      const local: Vec3 = [0, 0, 0];
      local[i] = Math.cos(t) * handle.halfExtents[i];
      local[j] = Math.sin(t) * handle.halfExtents[j];
      ring.push(vadd(handle.center, matVec(handle.axes, local)));
    }
    rings.push(ring);
  }
  return rings;
}
