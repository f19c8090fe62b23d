// Wire types mirroring the service's scene document and frame stream
// (docs/format.md and docs/api.md in the repository root).

export type JointTypeName =
  | "pivot"
  | "ball_and_socket"
  | "hinge"
  | "condyloid"
  | "plane"
  | "saddle";

export type WidgetCategory = "knob" | "screen" | "slider" | "button";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface SegmentRef {
  id: string;
  label: string;
  mesh_path: string;
  checksum: string;
}

export interface JointDoc {
  id: string;
  type: JointTypeName;
  base: string;
  movable: string;
  anchor: Vec3;
  axes: [Vec3, Vec3, Vec3];
  resistance: "low" | "medium" | "high";
  limits: Record<string, [number, number]>;
}

export interface WidgetDoc {
  id: string;
  category: WidgetCategory;
  subtype: string | null;
  segment: string;
  placement: { position: Vec3; orientation: Quat; scale: number };
  visible: boolean;
  binding: string | null;
  detents: number | null;
}

export interface BindingDoc {
  content: string;
  target_kind: "scene" | "segment" | "widget";
  target_id: string;
  role: "playback-source" | "annotation";
}

export interface SceneDoc {
  version: string;
  name: string;
  segments: SegmentRef[];
  joints: JointDoc[];
  widgets: WidgetDoc[];
  bindings: BindingDoc[];
  sim: { dt: number; gravity: Vec3; ground_plane: boolean; seed: number };
}

export interface SceneEnvelope {
  scene: SceneDoc;
  scene_version: number;
}

export interface MeshPayload {
  vertices: Vec3[];
  triangles: [number, number, number][];
  materials: number[] | null;
  watertight: boolean;
}

export interface JointPreviewParams {
  type: JointTypeName;
  cube_size: number;
  base_center: Vec3;
  movable_center: Vec3;
  anchor: Vec3;
  free_rotation_axes: number[];
  free_translation_axes: number[];
  limits: Record<string, [number, number]>;
  resistances: Record<string, number>;
}

export interface TouchEventDoc {
  type: "touch";
  time: number;
  center: Vec3;
  velocity: Vec3;
  radius: number;
}

export interface WidgetEventDoc {
  type: "widget";
  time: number;
  widget: string;
  kind: "press" | "release" | "drag" | "rotate";
  value: number;
}

export type ScriptEvent = TouchEventDoc | WidgetEventDoc;

export interface PoseDoc {
  position: Vec3;
  orientation: Quat;
  com_rest: Vec3;
}

export interface FrameMessage {
  type: "frame";
  step: number;
  time: number;
  poses: Record<string, PoseDoc>;
  playback: {
    selected: string | null;
    playing: Record<string, string>;
    volumes: Record<string, number>;
  };
  effects: {
    action: string;
    content: string | null;
    parameter: number | null;
    widget: string;
    time: number;
  }[];
}

export interface SummaryMessage {
  type: "summary";
  error: string | null;
  report: Record<string, unknown> | null;
}

export type StreamMessage = FrameMessage | SummaryMessage;
