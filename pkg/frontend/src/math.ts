// Small dense 3-D linear algebra: enough for gizmos and pose math, no deps.

import type { Mat3, Vec3 } from "./types.js";

export const IDENTITY: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];

export function vadd(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function vsub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function vscale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function vdot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function vcross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function vnorm(a: Vec3): number {
  return Math.sqrt(vdot(a, a));
}

export function matVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

export function matMul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array(9).fill(0) as unknown as Mat3;
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let acc = 0;
      for (let k = 0; k < 3; k++) acc += a[3 * i + k] * b[3 * k + j];
      out[3 * i + j] = acc;
    }
  }
  return out;
}

export function transpose(m: Mat3): Mat3 {
  return [m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]];
}

export function axisAngle(axis: Vec3, angle: number): Mat3 {
  const n = vnorm(axis);
  const [x, y, z] = n > 0 ? vscale(axis, 1 / n) : [0, 0, 1];
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const t = 1 - c;
  return [
    t * x * x + c, t * x * y - s * z, t * x * z + s * y,
    t * x * y + s * z, t * y * y + c, t * y * z - s * x,
    t * x * z - s * y, t * y * z + s * x, t * z * z + c,
  ];
}

export interface EigenResult {
  // eigenvalues descending; columns of `axes` are the matching unit vectors,
  // sign-fixed (largest-magnitude component positive) and right-handed
  values: Vec3;
  axes: Mat3;
}

/** Cyclic Jacobi eigendecomposition for a symmetric 3x3 matrix. */
export function symmetricEigen(m: Mat3): EigenResult {
  const a = [
    [m[0], m[1], m[2]],
    [m[3], m[4], m[5]],
    [m[6], m[7], m[8]],
  ];
  const v = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
  ];
  for (let sweep = 0; sweep < 64; sweep++) {
    let off = 0;
    for (let p = 0; p < 3; p++)
      for (let q = p + 1; q < 3; q++) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (let p = 0; p < 3; p++) {
      for (let q = p + 1; q < 3; q++) {
        if (Math.abs(a[p][q]) < 1e-300) continue;
        const theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const t = Math.sign(theta || 1) / (Math.abs(theta) + Math.sqrt(theta * theta + 1));
        const c = 1 / Math.sqrt(t * t + 1);
        const s = t * c;
        for (let k = 0; k < 3; k++) {
          const akp = a[k][p];
          const akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (let k = 0; k < 3; k++) {
          const apk = a[p][k];
          const aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (let k = 0; k < 3; k++) {
          const vkp = v[k][p];
          const vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  const entries: { value: number; vec: Vec3 }[] = [0, 1, 2].map((i) => ({
    value: a[i][i],
    vec: [v[0][i], v[1][i], v[2][i]] as Vec3,
  }));
  // stable descending sort so equal eigenvalues keep their order
  entries.sort((x, y) => (y.value === x.value ? 0 : y.value - x.value));
  const cols: Vec3[] = [];
  for (let i = 0; i < 2; i++) {
    let vec = entries[i].vec;
    const biggest = [0, 1, 2].reduce((b, k) =>
      Math.abs(vec[k]) > Math.abs(vec[b]) ? k : b, 0);
    if (vec[biggest] < 0) vec = vscale(vec, -1);
    cols.push(vec);
  }
  cols.push(vcross(cols[0], cols[1]));
  const axes: Mat3 = [
    cols[0][0], cols[1][0], cols[2][0],
    cols[0][1], cols[1][1], cols[2][1],
    cols[0][2], cols[1][2], cols[2][2],
  ];
  return { values: [entries[0].value, entries[1].value, entries[2].value], axes };
}

/** Rebuild a symmetric matrix from axes (columns) and eigenvalues. */
export function composeSymmetric(axes: Mat3, values: Vec3): Mat3 {
  const scaled: Mat3 = [
    axes[0] * values[0], axes[1] * values[1], axes[2] * values[2],
    axes[3] * values[0], axes[4] * values[1], axes[5] * values[2],
    axes[6] * values[0], axes[7] * values[1], axes[8] * values[2],
  ];
  return matMul(scaled, transpose(axes));
}

function mapEigenvalues(m: Mat3, fn: (x: number) => number): Mat3 {
  const { values, axes } = symmetricEigen(m);
  return composeSymmetric(axes, [fn(values[0]), fn(values[1]), fn(values[2])] as Vec3);
}

export function matLog(m: Mat3): Mat3 {
  return mapEigenvalues(m, Math.log);
}

export function matExp(m: Mat3): Mat3 {
  return mapEigenvalues(m, Math.exp);
}

/**
 * Log-domain covariance interpolation: exp((1-a) log S0 + a log S1).
 * Mirrors the server's rule so client-side previews of in-between frames
 * match what a render will produce; the server stays authoritative.
 */
export function logEuclideanInterp(s0: Mat3, s1: Mat3, alpha: number): Mat3 {
  const l0 = matLog(s0);
  const l1 = matLog(s1);
  const mix = l0.map((x, i) => (1 - alpha) * x + alpha * l1[i]) as Mat3;
  return matExp(mix);
}

export function lerpVec(a: Vec3, b: Vec3, alpha: number): Vec3 {
  return [
    a[0] + (b[0] - a[0]) * alpha,
    a[1] + (b[1] - a[1]) * alpha,
    a[2] + (b[2] - a[2]) * alpha,
  ];
}
