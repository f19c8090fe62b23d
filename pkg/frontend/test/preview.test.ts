// Joint preview mechanics: drag -> fingertip sweep mapping, deflection
// measurement, and the drag -> stream -> render pipeline latency with an
// immediate in-process service double.

import { describe, expect, it } from "vitest";
import * as THREE from "three";
import { applyPose } from "../src/mesh3d";
import { buildPreviewRun, dragToTouchScript, maxDeflection, type DragSample } from "../src/preview";
import type { FrameMessage, PoseDoc } from "../src/types";

const DRAG: DragSample = {
  origin: [0.02, -0.02, 0],
  direction: [-1, 0, 0],
  distance: 0.05,
  duration: 0.25,
};

describe("drag mapping", () => {
  it("samples the sweep at the physics rate with constant velocity", () => {
    const events = dragToTouchScript(DRAG);
    expect(events.length).toBe(30); // 0.25 s at 120 Hz
    expect(events[0].center).toEqual([0.02, -0.02, 0]);
    const speed = DRAG.distance / DRAG.duration;
    for (const event of events) {
      expect(event.type).toBe("touch");
      expect(event.velocity[0]).toBeCloseTo(-speed, 12);
      expect(event.radius).toBeCloseTo(0.01);
    }
    // non-decreasing timestamps (script invariant)
    for (let i = 1; i < events.length; i++) {
      expect(events[i].time).toBeGreaterThanOrEqual(events[i - 1].time);
    }
    const last = events[events.length - 1];
    expect(last.center[0]).toBeCloseTo(0.02 - speed * last.time, 12);
  });

  it("clamps degenerate drags to at least two samples", () => {
    const events = dragToTouchScript({ ...DRAG, duration: 1e-6, distance: 1e-5 });
    expect(events.length).toBeGreaterThanOrEqual(2);
  });

  it("builds a preview run with settle time after the poke", () => {
    const run = buildPreviewRun("hinge", "low", DRAG);
    expect(run.preview).toEqual({ type: "hinge", resistance: "low" });
    expect(run.duration).toBeGreaterThan(run.script[run.script.length - 1].time);
  });
});

describe("deflection measure", () => {
  it("reads the swing angle off a quaternion trail", () => {
    const angles = [0, 0.1, 0.4, 0.2];
    const quats = angles.map((a): [number, number, number, number] => [
      Math.cos(a / 2), Math.sin(a / 2), 0, 0,
    ]);
    expect(maxDeflection(quats)).toBeCloseTo(0.4, 9);
  });

  it("is zero for an untouched body", () => {
    expect(maxDeflection([[1, 0, 0, 0], [1, 0, 0, 0]])).toBe(0);
  });
});

describe("pose application", () => {
  it("maps streamed com poses onto scene-frame objects", () => {
    const object = new THREE.Object3D();
    // body authored with com at (0, -0.02, 0), rotated 90 deg about z,
    // com moved to (0.1, 0, 0)
    const half = Math.SQRT1_2;
    const pose: PoseDoc = {
      position: [0.1, 0, 0],
      orientation: [half, 0, 0, half],
      com_rest: [0, -0.02, 0],
    };
    applyPose(object, pose);
    object.updateMatrixWorld(true);
    const moved = new THREE.Vector3(0, -0.02, 0).applyMatrix4(object.matrixWorld);
    expect(moved.x).toBeCloseTo(0.1, 12);
    expect(moved.y).toBeCloseTo(0, 12);
    const other = new THREE.Vector3(0.01, -0.02, 0).applyMatrix4(object.matrixWorld);
    expect(other.x).toBeCloseTo(0.1, 12); // rotated onto +y
    expect(other.y).toBeCloseTo(0.01, 12);
  });
});

describe("round-trip latency (in-process double)", () => {
  it("drag -> simulate -> first frame -> rendered pose, median under 100 ms", async () => {
    const object = new THREE.Object3D();
    const samples: number[] = [];
    for (let trial = 0; trial < 9; trial++) {
      const started = performance.now();
      const run = buildPreviewRun("hinge", "low", DRAG);
      // double responds immediately with one frame per 4 steps
      const frames: FrameMessage[] = [];
      const steps = Math.round(run.duration * 120);
      for (let s = 4; s <= steps; s += 4) {
        frames.push({
          type: "frame",
          step: s,
          time: s / 120,
          poses: {
            movable: {
              position: [0, -0.02, 0],
              orientation: [Math.cos(s / 500), Math.sin(s / 500), 0, 0],
              com_rest: [0, -0.02, 0],
            },
          },
          playback: { selected: null, playing: {}, volumes: {} },
          effects: [],
        });
      }
      let first = true;
      for (const frame of frames) {
        applyPose(object, frame.poses.movable);
        if (first) {
          samples.push(performance.now() - started);
          first = false;
        }
      }
      expect(object.quaternion.length()).toBeCloseTo(1, 6);
    }
    const median = samples.sort((a, b) => a - b)[Math.floor(samples.length / 2)];
    expect(median).toBeLessThan(100);
  });
});
