import { describe, expect, it } from "vitest";

import {
  ISO_SCALE,
  ellipsoidFromKeyframe,
  keyframeFromEllipsoid,
  rotateKeyframe,
  scaleKeyframe,
  translateKeyframe,
} from "../src/gizmo.js";
import { symmetricEigen } from "../src/math.js";
import type { KeyframeJson, Mat3 } from "../src/types.js";

const diag = (a: number, b: number, c: number): Mat3 => [a, 0, 0, 0, b, 0, 0, 0, c];

const key = (): KeyframeJson => ({
  frame: 2,
  mu: [1, 2, 3],
  sigma: diag(4, 1, 0.25),
});

describe("ellipsoid handle conversion", () => {
  it("half extents are k * sqrt(eigenvalue) at the shared k = 2", () => {
    const handle = ellipsoidFromKeyframe(key());
    expect(ISO_SCALE).toBe(2);
    expect(handle.halfExtents[0]).toBeCloseTo(4, 9); // 2 * sqrt(4)
    expect(handle.halfExtents[1]).toBeCloseTo(2, 9);
    expect(handle.halfExtents[2]).toBeCloseTo(1, 9);
  });

  it("round-trips to the same keyframe", () => {
    const original = key();
    const back = keyframeFromEllipsoid(original.frame, ellipsoidFromKeyframe(original));
    back.mu.forEach((v, i) => expect(v).toBeCloseTo(original.mu[i], 9));
    back.sigma.forEach((v, i) => expect(v).toBeCloseTo(original.sigma[i], 9));
  });
});

describe("translate", () => {
  it("drag +1 m along world x moves mu.x by exactly 1", () => {
    const moved = translateKeyframe(key(), [1, 0, 0]);
    expect(moved.mu[0]).toBe(2);
    expect(moved.mu[1]).toBe(2);
    moved.sigma.forEach((v, i) => expect(v).toBe(key().sigma[i]));
  });
});

describe("scale", () => {
  it("x2 on the first principal axis multiplies the eigenvalue by 4", () => {
    const scaled = scaleKeyframe(key(), 0, 2);
    const { values } = symmetricEigen(scaled.sigma);
    expect(values[0]).toBeCloseTo(16, 9); // was 4
    expect(values[1]).toBeCloseTo(1, 9);
    expect(values[2]).toBeCloseTo(0.25, 9);
  });

  it("rejects non-positive factors", () => {
    expect(() => scaleKeyframe(key(), 0, 0)).toThrow();
  });
});

describe("rotate", () => {
  it("rotating 90 degrees about z swaps the x/y spreads", () => {
    const rotated = rotateKeyframe(key(), [0, 0, 1], Math.PI / 2);
    expect(rotated.sigma[0]).toBeCloseTo(1, 9);
    expect(rotated.sigma[4]).toBeCloseTo(4, 9);
    expect(rotated.sigma[8]).toBeCloseTo(0.25, 9);
  });

  it("keeps sigma exactly symmetric", () => {
    const rotated = rotateKeyframe(key(), [1, 1, 0.3], 0.7);
    expect(rotated.sigma[1]).toBe(rotated.sigma[3]);
    expect(rotated.sigma[2]).toBe(rotated.sigma[6]);
    expect(rotated.sigma[5]).toBe(rotated.sigma[7]);
  });

  it("preserves eigenvalues", () => {
    const rotated = rotateKeyframe(key(), [0.2, -1, 0.5], 1.1);
    const { values } = symmetricEigen(rotated.sigma);
    expect(values[0]).toBeCloseTo(4, 9);
    expect(values[1]).toBeCloseTo(1, 9);
    expect(values[2]).toBeCloseTo(0.25, 9);
  });
});
