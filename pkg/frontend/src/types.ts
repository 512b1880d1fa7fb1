// Payload shapes of the /v1 control-service API.

export type Vec3 = [number, number, number];
// 3x3 row-major
export type Mat3 = [number, number, number, number, number, number, number, number, number];

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface PoseJson {
  R: Mat3;
  t: Vec3;
}

export interface KeyframeJson {
  frame: number;
  mu: Vec3;
  sigma: Mat3;
}

export interface ObjectSummary {
  object_id: string;
  label: string;
  color: Vec3;
  cloud_points?: number;
  keys: KeyframeJson[];
}

export interface SceneSummary {
  scene_id: string;
  revision: number;
  frame_count: number;
  intrinsics: Intrinsics;
  poses: PoseJson[];
  objects: ObjectSummary[];
  dirty_frames?: number[];
}

export interface KeyframeDoc {
  object_id: string;
  color: Vec3;
  keys: KeyframeJson[];
  revision?: number;
}

export type RenderModeName = "camera-only" | "object-only" | "joint";

export interface FootprintInfo {
  object_id: string;
  visible: boolean;
  center: [number, number];
  center_depth: number;
  alpha_sum: number;
  alpha_centroid: [number, number] | null;
}

export interface RenderResponse {
  scene_id: string;
  revision: number;
  frame: number;
  mode: RenderModeName;
  width: number;
  height: number;
  scale: number;
  images: { bg_rgb: string; traj_rgb: string; mask: string };
  mask_stats: { sum: number; max: number };
  footprints: FootprintInfo[];
}

export interface EvalReportJson {
  rot_err: number;
  trans_err: number;
  objmc: number;
  matching: { gt_id: string; pred_id: string | null }[];
  per_object_errors: Record<string, number>;
}
