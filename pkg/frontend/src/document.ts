// Editor document: local working copy of one scene with optimistic edits.
//
// Every mutation snapshots the pre-edit state, applies locally, then PUTs
// with the last-known server revision. A 409 means someone else won the
// race: the document reloads server state and surfaces the conflict rather
// than silently merging. Undo restores the snapshot locally and pushes it to
// the server like any other edit.

import { ApiClient, ConflictError } from "./api.js";
import type {
  Intrinsics,
  KeyframeJson,
  Mat3,
  PoseJson,
  SceneSummary,
  Vec3,
} from "./types.js";

export interface ObjectTrack {
  objectId: string;
  label: string;
  color: Vec3;
  keys: KeyframeJson[];
}

export interface DocumentJson {
  scene_id: string;
  revision: number;
  frame_count: number;
  intrinsics: Intrinsics;
  poses: PoseJson[];
  objects: { object_id: string; label: string; color: Vec3; keys: KeyframeJson[] }[];
  selected_object: string | null;
  current_frame: number;
}

export type ConflictListener = (objectId: string | null, error: ConflictError) => void;

function cloneKeys(keys: KeyframeJson[]): KeyframeJson[] {
  return keys.map((k) => ({
    frame: k.frame,
    mu: [...k.mu] as Vec3,
    sigma: [...k.sigma] as Mat3,
  }));
}

interface Snapshot {
  objectId: string | null; // null = camera edit
  keys?: KeyframeJson[];
  poses?: PoseJson[];
}

export class EditorDocument {
  sceneId = "";
  revision = -1;
  frameCount = 0;
  intrinsics!: Intrinsics;
  poses: PoseJson[] = [];
  objects = new Map<string, ObjectTrack>();
  selectedObject: string | null = null;
  currentFrame = 1;

  private undoStack: Snapshot[] = [];
  private conflictListeners: ConflictListener[] = [];

  constructor(private readonly api: ApiClient) {}

  onConflict(listener: ConflictListener): void {
    this.conflictListeners.push(listener);
  }

  async load(sceneId: string): Promise<void> {
    this.applySummary(await this.api.getScene(sceneId));
  }

  private applySummary(summary: SceneSummary): void {
    this.sceneId = summary.scene_id;
    this.revision = summary.revision;
    this.frameCount = summary.frame_count;
    this.intrinsics = summary.intrinsics;
    this.poses = summary.poses;
    this.objects = new Map(
      summary.objects.map((o) => [
        o.object_id,
        {
          objectId: o.object_id,
          label: o.label,
          color: o.color,
          keys: cloneKeys(o.keys),
        },
      ]),
    );
    if (this.selectedObject === null || !this.objects.has(this.selectedObject)) {
      this.selectedObject = summary.objects[0]?.object_id ?? null;
    }
    this.currentFrame = Math.min(Math.max(this.currentFrame, 1), this.frameCount);
  }

  select(objectId: string): void {
    if (!this.objects.has(objectId)) throw new Error(`unknown object ${objectId}`);
    this.selectedObject = objectId;
  }

  setFrame(frame: number): void {
    if (frame < 1 || frame > this.frameCount) {
      throw new Error(`frame ${frame} outside [1, ${this.frameCount}]`);
    }
    this.currentFrame = frame;
  }

  track(objectId: string): ObjectTrack {
    const track = this.objects.get(objectId);
    if (!track) throw new Error(`unknown object ${objectId}`);
    return track;
  }

  /** Replace or insert one key in an object's track and push it to the server. */
  async setKeyframe(objectId: string, key: KeyframeJson): Promise<void> {
    const track = this.track(objectId);
    const keys = cloneKeys(track.keys).filter((k) => k.frame !== key.frame);
    keys.push({ frame: key.frame, mu: [...key.mu] as Vec3, sigma: [...key.sigma] as Mat3 });
    keys.sort((a, b) => a.frame - b.frame);
    await this.replaceKeyframes(objectId, keys);
  }

  /** Replace an object's whole keyframe track (optimistic, undoable). */
  async replaceKeyframes(objectId: string, keys: KeyframeJson[]): Promise<void> {
    const track = this.track(objectId);
    const snapshot: Snapshot = { objectId, keys: cloneKeys(track.keys) };
    track.keys = cloneKeys(keys);
    try {
      const result = await this.api.putKeyframes(
        this.sceneId, objectId, this.revision, keys, track.color,
      );
      this.revision = result.revision;
      this.undoStack.push(snapshot);
    } catch (err) {
      if (err instanceof ConflictError) {
        await this.reconcile(objectId, err);
        return;
      }
      track.keys = snapshot.keys!; // local state must not drift from the server
      throw err;
    }
  }

  async replaceCamera(poses: PoseJson[]): Promise<void> {
    const snapshot: Snapshot = { objectId: null, poses: this.poses };
    this.poses = poses;
    try {
      const result = await this.api.putCamera(this.sceneId, this.revision, poses);
      this.revision = result.revision;
      this.frameCount = result.frame_count;
      this.currentFrame = Math.min(this.currentFrame, this.frameCount);
      this.undoStack.push(snapshot);
    } catch (err) {
      if (err instanceof ConflictError) {
        await this.reconcile(null, err);
        return;
      }
      this.poses = snapshot.poses!;
      throw err;
    }
  }

  private async reconcile(objectId: string | null, error: ConflictError): Promise<void> {
    // Someone else edited first: adopt the server state, drop the local edit.
    await this.load(this.sceneId);
    for (const listener of this.conflictListeners) listener(objectId, error);
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  async undo(): Promise<void> {
    const snapshot = this.undoStack.pop();
    if (!snapshot) return;
    if (snapshot.objectId !== null) {
      const track = this.track(snapshot.objectId);
      track.keys = cloneKeys(snapshot.keys!);
      const result = await this.api.putKeyframes(
        this.sceneId, snapshot.objectId, this.revision, track.keys, track.color,
      );
      this.revision = result.revision;
    } else {
      this.poses = snapshot.poses!;
      const result = await this.api.putCamera(this.sceneId, this.revision, this.poses);
      this.revision = result.revision;
      this.frameCount = result.frame_count;
    }
  }

  toJSON(): DocumentJson {
    return {
      scene_id: this.sceneId,
      revision: this.revision,
      frame_count: this.frameCount,
      intrinsics: this.intrinsics,
      poses: this.poses,
      objects: [...this.objects.values()].map((o) => ({
        object_id: o.objectId,
        label: o.label,
        color: o.color,
        keys: cloneKeys(o.keys),
      })),
      selected_object: this.selectedObject,
      current_frame: this.currentFrame,
    };
  }

  static fromJSON(api: ApiClient, doc: DocumentJson): EditorDocument {
    const out = new EditorDocument(api);
    out.sceneId = doc.scene_id;
    out.revision = doc.revision;
    out.frameCount = doc.frame_count;
    out.intrinsics = doc.intrinsics;
    out.poses = doc.poses;
    out.objects = new Map(
      doc.objects.map((o) => [
        o.object_id,
        { objectId: o.object_id, label: o.label, color: o.color, keys: cloneKeys(o.keys) },
      ]),
    );
    out.selectedObject = doc.selected_object;
    out.currentFrame = doc.current_frame;
    return out;
  }
}
