import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Timeline } from "../src/timeline.js";
import type { RenderResponse } from "../src/types.js";

function renderResponse(frame: number, revision = 0): RenderResponse {
  return {
    scene_id: "s1",
    revision,
    frame,
    mode: "joint",
    width: 48,
    height: 32,
    scale: 0.5,
    images: { bg_rgb: "", traj_rgb: "", mask: "" },
    mask_stats: { sum: frame === 1 ? 0 : 5, max: frame === 1 ? 0 : 1 },
    footprints: [],
  };
}

function makeTimeline(handler: (url: string) => Promise<Response>) {
  const api = new ApiClient("http://fake", (url) => handler(url));
  return new Timeline(api, () => "s1", () => 4);
}

const ok = (payload: unknown) =>
  new Response(JSON.stringify(payload), { status: 200 });

describe("Timeline", () => {
  it("scrub fetches the requested frame", async () => {
    const urls: string[] = [];
    const timeline = makeTimeline(async (url) => {
      urls.push(url);
      const frame = Number(new URL(url).searchParams.get("frame"));
      return ok(renderResponse(frame));
    });
    await timeline.scrub(3);
    expect(urls).toHaveLength(1);
    expect(timeline.preview.frame).toBe(3);
    expect(timeline.preview.stale).toBe(false);
  });

  it("frame 1 preview reports an empty mask", async () => {
    const timeline = makeTimeline(async (url) => {
      const frame = Number(new URL(url).searchParams.get("frame"));
      return ok(renderResponse(frame));
    });
    await timeline.scrub(1);
    expect(timeline.preview.response!.mask_stats.sum).toBe(0);
  });

  it("clamps scrubbing to the track", async () => {
    const timeline = makeTimeline(async (url) => {
      const frame = Number(new URL(url).searchParams.get("frame"));
      return ok(renderResponse(frame));
    });
    await timeline.scrub(99);
    expect(timeline.frame).toBe(4);
  });

  it("out-of-order responses never overwrite newer ones", async () => {
    const resolvers: ((r: Response) => void)[] = [];
    const timeline = makeTimeline(
      (url) =>
        new Promise<Response>((resolve) => {
          const frame = Number(new URL(url).searchParams.get("frame"));
          resolvers.push(() => resolve(ok(renderResponse(frame))));
        }),
    );
    const first = timeline.scrub(2);
    const second = timeline.scrub(3);
    // finish the *second* request first, then the stale first one
    resolvers[1](ok(renderResponse(3)));
    await second;
    resolvers[0](ok(renderResponse(2)));
    await first;
    expect(timeline.preview.frame).toBe(3);
    expect(timeline.preview.stale).toBe(false);
  });

  it("network failure keeps the previous preview and flags it stale", async () => {
    let fail = false;
    const toasts: string[] = [];
    const timeline = makeTimeline(async (url) => {
      if (fail) throw new Error("boom");
      const frame = Number(new URL(url).searchParams.get("frame"));
      return ok(renderResponse(frame));
    });
    timeline.onToast((m) => toasts.push(m));
    await timeline.scrub(2);
    const kept = timeline.preview.response;
    fail = true;
    await timeline.scrub(3);
    expect(timeline.preview.stale).toBe(true);
    expect(timeline.preview.response).toBe(kept);
    expect(toasts).toHaveLength(1);
  });
});
