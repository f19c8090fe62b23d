// Typed client for the authoring service. Every mutation the UI can issue
// goes through one method here, and every method maps to one documented
// endpoint -- the request-log audit in the tests checks exactly that.

import type {
  JointPreviewParams,
  JointTypeName,
  MeshPayload,
  SceneEnvelope,
  ScriptEvent,
  Vec3,
  WidgetCategory,
} from "./types";

// The documented endpoint table (docs/api.md). Paths use :id placeholders.
export const DOCUMENTED_ENDPOINTS: ReadonlyArray<readonly [string, string]> = [
  ["GET", "/scene"],
  ["GET", "/segments/:id/mesh"],
  ["GET", "/joints/preview/:type"],
  ["GET", "/runs/latest"],
  ["POST", "/segments"],
  ["POST", "/slice"],
  ["POST", "/segment"],
  ["POST", "/joints"],
  ["POST", "/widgets"],
  ["PATCH", "/widgets/:id"],
  ["POST", "/content"],
  ["POST", "/bindings"],
  ["POST", "/undo"],
  ["POST", "/save"],
  ["POST", "/validate"],
  ["POST", "/simulate"],
];

export function matchesDocumented(method: string, path: string): boolean {
  const clean = path.split("?")[0];
  return DOCUMENTED_ENDPOINTS.some(([m, pattern]) => {
    if (m !== method) return false;
    const want = pattern.split("/");
    const have = clean.split("/");
    if (want.length !== have.length) return false;
    return want.every((part, i) => part.startsWith(":") || part === have[i]);
  });
}

export interface RequestRecord {
  method: string;
  path: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type Transport = (
  method: string,
  path: string,
  body?: unknown,
  form?: FormData,
) => Promise<unknown>;

export function fetchTransport(baseUrl: string): Transport {
  return async (method, path, body, form) => {
    const init: RequestInit = { method };
    if (form) {
      init.body = form;
    } else if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "content-type": "application/json" };
    }
    const response = await fetch(baseUrl + path, init);
    const doc = await response.json().catch(() => ({}));
    if (!response.ok) {
      const err = doc as { error?: string; detail?: string };
      throw new ApiError(response.status, err.error ?? "HttpError", err.detail ?? "");
    }
    return doc;
  };
}

export class ApiClient {
  readonly log: RequestRecord[] = [];

  constructor(private transport: Transport) {}

  private call<T>(method: string, path: string, body?: unknown, form?: FormData): Promise<T> {
    this.log.push({ method, path });
    return this.transport(method, path, body, form) as Promise<T>;
  }

  getScene(): Promise<SceneEnvelope> {
    return this.call("GET", "/scene");
  }

  getSegmentMesh(id: string): Promise<{ segment: string; label: string; mesh: MeshPayload }> {
    return this.call("GET", `/segments/${id}/mesh`);
  }

  getJointPreview(type: JointTypeName): Promise<JointPreviewParams> {
    return this.call("GET", `/joints/preview/${type}`);
  }

  getLatestRun(): Promise<Record<string, unknown>> {
    return this.call("GET", "/runs/latest");
  }

  uploadSegment(file: File | Blob, name: string): Promise<{ segment: string; scene_version: number }> {
    const form = new FormData();
    form.append("file", file, name + ".obj");
    form.append("name", name);
    return this.call("POST", "/segments", undefined, form);
  }

  slice(segment: string, point: Vec3, normal: Vec3): Promise<{ segments: string[]; scene_version: number }> {
    return this.call("POST", "/slice", { segment, plane: { point, normal } });
  }

  segmentAuto(options: {
    segment?: string;
    delta?: number;
    k?: number | null;
    seed?: number;
  }): Promise<{ k: number; method: string; segments: string[]; scene_version: number }> {
    return this.call("POST", "/segment", options);
  }

  addJoint(body: {
    type: JointTypeName;
    base: string;
    movable: string;
    resistance?: string;
    auto_frame?: boolean;
    anchor?: Vec3;
    axes?: [Vec3, Vec3, Vec3];
  }): Promise<{ joint: string; scene_version: number }> {
    return this.call("POST", "/joints", body);
  }

  addWidget(body: {
    category: WidgetCategory;
    segment: string;
    subtype?: string;
    placement?: { position: Vec3; orientation?: [number, number, number, number]; scale?: number };
    binding?: string;
    detents?: number;
  }): Promise<{ widget: string; scene_version: number }> {
    return this.call("POST", "/widgets", body);
  }

  patchWidget(
    id: string,
    patch: { visible?: boolean; segment?: string },
  ): Promise<{ widget: string; scene_version: number }> {
    return this.call("PATCH", `/widgets/${id}`, patch);
  }

  uploadContent(file: File | Blob, filename: string, kind?: string): Promise<{
    content: string;
    kind: string;
    scene_version: number;
  }> {
    const form = new FormData();
    form.append("file", file, filename);
    if (kind) form.append("kind", kind);
    return this.call("POST", "/content", undefined, form);
  }

  bindContent(body: {
    content: string;
    target_kind: "scene" | "segment" | "widget";
    target_id: string;
    role: "playback-source" | "annotation";
  }): Promise<{ scene_version: number }> {
    return this.call("POST", "/bindings", body);
  }

  undo(): Promise<{ scene_version: number }> {
    return this.call("POST", "/undo");
  }

  save(path?: string): Promise<{ path: string; scene_version: number }> {
    return this.call("POST", "/save", path ? { path } : {});
  }

  validate(): Promise<{ violations: string[] }> {
    return this.call("POST", "/validate");
  }

  simulate(body: {
    duration: number;
    script: ScriptEvent[];
    frame_stride?: number;
    preview?: { type: JointTypeName; resistance?: string };
  }): Promise<{ started: boolean; frame_stride: number }> {
    return this.call("POST", "/simulate", body);
  }
}
