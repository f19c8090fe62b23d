// Joint preview logic: the two-cube demo. Pointer drags on the blue
// (movable) cube become fingertip touch sweeps; the streamed poses
// animate the cubes. Pure mapping functions live here so they are
// testable without a canvas.

import type { ScriptEvent, TouchEventDoc, Vec3 } from "./types";

export interface DragSample {
  /** world-space contact point at drag start */
  origin: Vec3;
  /** world-space drag direction (unit) */
  direction: Vec3;
  /** drag distance in meters */
  distance: number;
  /** wall-clock drag duration in seconds */
  duration: number;
}

/**
 * Convert one pointer drag into a fingertip sweep: touch-sphere samples
 * along the drag path at the physics rate, moving with the drag velocity.
 */
export function dragToTouchScript(
  drag: DragSample,
  dt = 1 / 120,
  radius = 0.01,
): TouchEventDoc[] {
  const duration = Math.max(drag.duration, dt);
  const steps = Math.max(2, Math.min(240, Math.round(duration / dt)));
  const speed = drag.distance / duration;
  const events: TouchEventDoc[] = [];
  for (let k = 0; k < steps; k++) {
    const t = k * dt;
    events.push({
      type: "touch",
      time: t,
      center: [
        drag.origin[0] + drag.direction[0] * speed * t,
        drag.origin[1] + drag.direction[1] * speed * t,
        drag.origin[2] + drag.direction[2] * speed * t,
      ],
      velocity: [
        drag.direction[0] * speed,
        drag.direction[1] * speed,
        drag.direction[2] * speed,
      ],
      radius,
    });
  }
  return events;
}

/** Max |angle| (rad) of a streamed quaternion trail, for comparing how far
 * the movable cube swings under different resistance presets. */
export function maxDeflection(orientations: [number, number, number, number][]): number {
  let max = 0;
  for (const [w] of orientations) {
    const clamped = Math.min(1, Math.max(-1, w));
    max = Math.max(max, 2 * Math.acos(Math.abs(clamped)));
  }
  return max;
}

export interface PreviewRun {
  script: ScriptEvent[];
  duration: number;
  preview: { type: import("./types").JointTypeName; resistance: string };
}

export function buildPreviewRun(
  type: import("./types").JointTypeName,
  resistance: string,
  drag: DragSample,
): PreviewRun {
  const script = dragToTouchScript(drag);
  const tail = 1.0; // let the joint settle after the poke
  const duration = script[script.length - 1].time + tail;
  return { script, duration, preview: { type, resistance } };
}
