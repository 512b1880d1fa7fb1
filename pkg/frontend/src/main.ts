// Browser entry point: wires the editor document, timeline, viewport canvas,
// and ellipsoid drag gizmo to a minimal DOM shell (see index.html).

import { ApiClient } from "./api.js";
import { EditorDocument } from "./document.js";
import { ellipsoidFromKeyframe, translateKeyframe } from "./gizmo.js";
import { Timeline } from "./timeline.js";
import type { KeyframeJson, RenderModeName, Vec3 } from "./types.js";
import { cameraPathScreen, dragDeltaToWorld, ellipsoidScreen, projectPoint } from "./viewport.js";

interface Elements {
  preview: HTMLCanvasElement;
  viewport: HTMLCanvasElement;
  frameSlider: HTMLInputElement;
  frameLabel: HTMLElement;
  objectList: HTMLSelectElement;
  modeSelect: HTMLSelectElement;
  channelToggles: { bg: HTMLInputElement; traj: HTMLInputElement; mask: HTMLInputElement };
  undoButton: HTMLButtonElement;
  exportButton: HTMLButtonElement;
  status: HTMLElement;
}

function getElements(): Elements {
  const byId = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;
  return {
    preview: byId("preview"),
    viewport: byId("viewport"),
    frameSlider: byId("frame-slider"),
    frameLabel: byId("frame-label"),
    objectList: byId("object-list"),
    modeSelect: byId("mode-select"),
    channelToggles: {
      bg: byId("toggle-bg"),
      traj: byId("toggle-traj"),
      mask: byId("toggle-mask"),
    },
    undoButton: byId("undo-button"),
    exportButton: byId("export-button"),
    status: byId("status"),
  };
}

async function drawPreview(el: Elements, timeline: Timeline): Promise<void> {
  const state = timeline.preview;
  const ctx = el.preview.getContext("2d")!;
  if (!state.response) return;
  const { images, width, height } = state.response;
  el.preview.width = width;
  el.preview.height = height;
  ctx.clearRect(0, 0, width, height);
  const layers: [string, boolean, number][] = [
    [images.bg_rgb, el.channelToggles.bg.checked, 1.0],
    [images.traj_rgb, el.channelToggles.traj.checked, 0.85],
    [images.mask, el.channelToggles.mask.checked, 0.4],
  ];
  for (const [b64, enabled, alpha] of layers) {
    if (!enabled) continue;
    const img = new Image();
    img.src = `data:image/png;base64,${b64}`;
    await img.decode();
    ctx.globalAlpha = alpha;
    ctx.drawImage(img, 0, 0);
  }
  ctx.globalAlpha = 1.0;
  el.status.classList.toggle("stale", state.stale);
}

function drawViewport(el: Elements, doc: EditorDocument): void {
  const ctx = el.viewport.getContext("2d")!;
  const K = doc.intrinsics;
  el.viewport.width = K.width;
  el.viewport.height = K.height;
  ctx.clearRect(0, 0, K.width, K.height);
  const viewPose = doc.poses[doc.currentFrame - 1];

  ctx.strokeStyle = "#888";
  ctx.beginPath();
  let started = false;
  for (const p of cameraPathScreen(doc.poses, K, viewPose)) {
    if (!p) continue;
    if (started) ctx.lineTo(p.x, p.y);
    else ctx.moveTo(p.x, p.y);
    started = true;
  }
  ctx.stroke();

  // ellipsoids stay in the 3-D viewport in every mode, even when the
  // preview's trajectory channel is zeroed (camera-only)
  for (const track of doc.objects.values()) {
    const key = nearestKey(track.keys, doc.currentFrame);
    const screen = ellipsoidScreen(key, K, viewPose);
    ctx.strokeStyle = `rgb(${track.color.map((c) => Math.round(c * 255)).join(",")})`;
    for (const ring of screen.rings) {
      ctx.beginPath();
      let first = true;
      for (const p of ring) {
        if (!p) continue;
        if (first) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
        first = false;
      }
      ctx.stroke();
    }
    if (screen.center && track.objectId === doc.selectedObject) {
      ctx.fillStyle = "#fff";
      ctx.fillRect(screen.center.x - 2, screen.center.y - 2, 4, 4);
    }
  }
}

function nearestKey(keys: KeyframeJson[], frame: number): KeyframeJson {
  let best = keys[0];
  for (const k of keys) {
    if (Math.abs(k.frame - frame) < Math.abs(best.frame - frame)) best = k;
  }
  return best;
}

export async function start(baseUrl: string, sceneId: string): Promise<void> {
  const api = new ApiClient(baseUrl);
  const doc = new EditorDocument(api);
  await doc.load(sceneId);
  const el = getElements();
  const timeline = new Timeline(api, () => doc.sceneId, () => doc.frameCount);

  el.frameSlider.min = "1";
  el.frameSlider.max = String(doc.frameCount);
  el.objectList.innerHTML = "";
  for (const track of doc.objects.values()) {
    const option = document.createElement("option");
    option.value = track.objectId;
    option.textContent = `${track.objectId} (${track.label})`;
    el.objectList.appendChild(option);
  }

  doc.onConflict(() => {
    el.status.textContent = "edit conflicted with another client; reloaded server state";
    void timeline.refresh();
  });
  timeline.onPreview(() => void drawPreview(el, timeline));
  timeline.onToast((message) => (el.status.textContent = message));

  el.frameSlider.addEventListener("input", () => {
    const frame = Number(el.frameSlider.value);
    doc.setFrame(frame);
    el.frameLabel.textContent = `frame ${frame}/${doc.frameCount}`;
    drawViewport(el, doc);
    void timeline.scrub(frame);
  });
  el.modeSelect.addEventListener("change", () => {
    void timeline.setMode(el.modeSelect.value as RenderModeName);
    drawViewport(el, doc);
  });
  el.objectList.addEventListener("change", () => {
    doc.select(el.objectList.value);
    drawViewport(el, doc);
  });
  el.undoButton.addEventListener("click", () => {
    void doc.undo().then(() => {
      drawViewport(el, doc);
      return timeline.refresh();
    });
  });
  el.exportButton.addEventListener("click", () => {
    void api.exportScene(doc.sceneId, el.modeSelect.value as RenderModeName).then((r) => {
      el.status.textContent = `exported ${r.paths.length} files to ${r.out_dir}`;
    });
  });

  // drag-to-translate gizmo on the viewport canvas
  let dragging: { startX: number; startY: number; key: KeyframeJson; depth: number } | null = null;
  el.viewport.addEventListener("pointerdown", (ev) => {
    if (!doc.selectedObject) return;
    const track = doc.track(doc.selectedObject);
    const key = nearestKey(track.keys, doc.currentFrame);
    const viewPose = doc.poses[doc.currentFrame - 1];
    const center = projectPoint(ellipsoidFromKeyframe(key).center, doc.intrinsics, viewPose);
    if (!center) return;
    if (Math.hypot(ev.offsetX - center.x, ev.offsetY - center.y) > 24) return;
    dragging = { startX: ev.offsetX, startY: ev.offsetY, key, depth: center.depth };
    el.viewport.setPointerCapture(ev.pointerId);
  });
  el.viewport.addEventListener("pointerup", (ev) => {
    if (!dragging || !doc.selectedObject) return;
    const viewPose = doc.poses[doc.currentFrame - 1];
    const delta: Vec3 = dragDeltaToWorld(
      ev.offsetX - dragging.startX,
      ev.offsetY - dragging.startY,
      dragging.depth,
      doc.intrinsics,
      viewPose,
    );
    const moved = translateKeyframe({ ...dragging.key, frame: doc.currentFrame }, delta);
    dragging = null;
    void doc.setKeyframe(doc.selectedObject, moved).then(() => {
      drawViewport(el, doc);
      return timeline.refresh();
    });
  });

  drawViewport(el, doc);
  el.frameLabel.textContent = `frame 1/${doc.frameCount}`;
  await timeline.scrub(1);
}

declare global {
  interface Window {
    trajectoryStudio: { start: typeof start };
  }
}

if (typeof window !== "undefined") {
  window.trajectoryStudio = { start };
}
