// Typed client for the /v1 control-service endpoints.

import type {
  EvalReportJson,
  KeyframeDoc,
  KeyframeJson,
  PoseJson,
  RenderModeName,
  RenderResponse,
  SceneSummary,
  Vec3,
} from "./types.js";

export class ConflictError extends Error {
  constructor(readonly expected: number, readonly got: number) {
    super(`stale revision ${got}, server is at ${expected}`);
  }
}

export class ValidationError extends Error {
  constructor(readonly loc: unknown[], message: string) {
    super(message);
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (response.ok) {
      return (await response.json()) as T;
    }
    let detail: any = null;
    try {
      detail = (await response.json()).detail;
    } catch {
      // non-JSON error body; fall through to generic error
    }
    if (response.status === 409 && detail) {
      throw new ConflictError(detail.expected, detail.got);
    }
    if (response.status === 422 && detail) {
      throw new ValidationError(detail.loc ?? [], detail.msg ?? JSON.stringify(detail));
    }
    throw new ApiError(response.status, detail ? JSON.stringify(detail) : response.statusText);
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("/v1/health");
  }

  listScenes(): Promise<{ scenes: SceneSummary[] }> {
    return this.request("/v1/scenes");
  }

  getScene(sceneId: string): Promise<SceneSummary> {
    return this.request(`/v1/scenes/${sceneId}`);
  }

  getKeyframes(sceneId: string, objectId: string): Promise<KeyframeDoc> {
    return this.request(`/v1/scenes/${sceneId}/objects/${objectId}/keyframes`);
  }

  putCamera(
    sceneId: string,
    revision: number,
    poses: PoseJson[],
  ): Promise<{ revision: number; frame_count: number }> {
    return this.request(`/v1/scenes/${sceneId}/camera`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, poses }),
    });
  }

  putKeyframes(
    sceneId: string,
    objectId: string,
    revision: number,
    keys: KeyframeJson[],
    color?: Vec3,
  ): Promise<{ revision: number }> {
    return this.request(`/v1/scenes/${sceneId}/objects/${objectId}/keyframes`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, keys, color }),
    });
  }

  renderPreview(
    sceneId: string,
    frame: number,
    mode: RenderModeName = "joint",
    full = false,
  ): Promise<RenderResponse> {
    const params = new URLSearchParams({
      frame: String(frame),
      mode,
      full: full ? "1" : "0",
    });
    return this.request(`/v1/scenes/${sceneId}/render?${params}`, { method: "POST" });
  }

  exportScene(
    sceneId: string,
    mode: RenderModeName = "joint",
    outDir?: string,
  ): Promise<{ out_dir: string; paths: string[]; revision: number }> {
    return this.request(`/v1/scenes/${sceneId}/export`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode, out_dir: outDir }),
    });
  }

  evalPair(gt: unknown, pred: unknown, penalty = 10.0): Promise<EvalReportJson> {
    return this.request("/v1/eval", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ gt, pred, penalty }),
    });
  }
}
