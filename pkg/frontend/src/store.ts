// ViewModel: a mirror of the service's scene plus UI-only state. The UI is
// stateless with respect to truth -- reloading rebuilds everything from
// GET /scene. The mirrored version may trail the service's counter; any
// stale view refreshes before mutating.

import type { ApiClient } from "./api";
import type { MeshPayload, SceneDoc, SceneEnvelope } from "./types";

export type ToolMode = "slice" | "segment" | "joint" | "widget" | "content" | "simulate";

export interface PlaneGizmo {
  point: [number, number, number];
  normal: [number, number, number];
}

export interface JointDraft {
  type: import("./types").JointTypeName;
  resistance: "low" | "medium" | "high";
  base: string | null;
  movable: string | null;
}

type Listener = () => void;

export class SceneStore {
  scene: SceneDoc | null = null;
  sceneVersion = -1;
  meshes = new Map<string, MeshPayload>();

  tool: ToolMode = "slice";
  selection: string | null = null; // segment or widget id
  planeGizmo: PlaneGizmo = { point: [0, 0, 0], normal: [0, 1, 0] };
  jointDraft: JointDraft = {
    type: "hinge",
    resistance: "low",
    base: null,
    movable: null,
  };

  private listeners: Listener[] = [];

  constructor(readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Rebuild the mirror from GET /scene (page load and after mutations). */
  async refresh(): Promise<SceneEnvelope> {
    const envelope = await this.api.getScene();
    this.applyEnvelope(envelope);
    const wanted = new Set(envelope.scene.segments.map((s) => s.id));
    for (const id of [...this.meshes.keys()]) {
      if (!wanted.has(id)) this.meshes.delete(id);
    }
    await Promise.all(
      envelope.scene.segments
        .filter((s) => !this.meshes.has(s.id))
        .map(async (s) => {
          const result = await this.api.getSegmentMesh(s.id);
          this.meshes.set(s.id, result.mesh);
        }),
    );
    this.notify();
    return envelope;
  }

  applyEnvelope(envelope: SceneEnvelope): void {
    this.scene = envelope.scene;
    this.sceneVersion = envelope.scene_version;
    if (this.selection && !this.segmentIds().includes(this.selection)) {
      const widgets = envelope.scene.widgets.map((w) => w.id);
      if (!widgets.includes(this.selection)) this.selection = null;
    }
    this.notify();
  }

  segmentIds(): string[] {
    return this.scene ? this.scene.segments.map((s) => s.id) : [];
  }

  /**
   * Run one mutation. A stale mirror (any recorded version drift) refreshes
   * first; the mirror refreshes again afterwards so meshes and references
   * stay consistent with the post-mutation scene.
   */
  async mutate<T extends { scene_version: number }>(
    action: (api: ApiClient) => Promise<T>,
  ): Promise<T> {
    const current = await this.api.getScene();
    if (current.scene_version !== this.sceneVersion) {
      this.applyEnvelope(current);
    }
    const result = await action(this.api);
    this.sceneVersion = result.scene_version;
    await this.refresh();
    return result;
  }

  setTool(tool: ToolMode): void {
    this.tool = tool;
    this.notify();
  }

  select(id: string | null): void {
    this.selection = id;
    this.notify();
  }

  pickJointSide(side: "base" | "movable", segmentId: string): string | null {
    // same segment on both sides is invalid; report instead of sending
    const other = side === "base" ? this.jointDraft.movable : this.jointDraft.base;
    if (other === segmentId) {
      return "base and movable must be different segments";
    }
    this.jointDraft = { ...this.jointDraft, [side]: segmentId };
    this.notify();
    return null;
  }
}
