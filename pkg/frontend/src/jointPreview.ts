// Interactive two-cube joint demo: grey base on top, blue movable below.
// Dragging the blue cube sends a fingertip sweep to a preview simulation
// on the service and animates the streamed poses.

import * as THREE from "three";
import type { ApiClient } from "./api";
import { applyPose } from "./mesh3d";
import { buildPreviewRun, maxDeflection, type DragSample } from "./preview";
import { openFrameStream, wsBaseFrom } from "./stream";
import type { JointPreviewParams, JointTypeName } from "./types";

export class JointPreviewPanel {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private baseCube: THREE.Mesh | null = null;
  private movableCube: THREE.Mesh | null = null;
  private params: JointPreviewParams | null = null;
  private dragStart: { point: THREE.Vector3; at: number } | null = null;
  private raycaster = new THREE.Raycaster();
  /** round-trip latency samples (drag end -> first rendered frame), ms */
  readonly latencySamples: number[] = [];
  lastDeflection = 0;
  onStatus: ((text: string) => void) | null = null;

  constructor(
    private api: ApiClient,
    private httpBase: string,
    canvas: HTMLCanvasElement,
    public resistance: "low" | "medium" | "high" = "low",
  ) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(45, 1, 0.001, 10);
    this.camera.position.set(0.09, 0.05, 0.13);
    this.camera.lookAt(0, 0, 0);
    this.scene.background = new THREE.Color(0x101216);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const light = new THREE.DirectionalLight(0xffffff, 1.2);
    light.position.set(0.5, 1, 0.6);
    this.scene.add(light);
    this.renderer.setSize(canvas.clientWidth || 260, canvas.clientHeight || 200, false);
    this.renderer.setAnimationLoop(() => this.renderer.render(this.scene, this.camera));

    canvas.addEventListener("pointerdown", (event) => this.beginDrag(event));
    canvas.addEventListener("pointerup", (event) => this.endDrag(event));
  }

  async show(type: JointTypeName): Promise<void> {
    this.params = await this.api.getJointPreview(type);
    const size = this.params.cube_size;
    for (const old of [this.baseCube, this.movableCube]) {
      if (old) {
        this.scene.remove(old);
        old.geometry.dispose();
      }
    }
    const geometry = new THREE.BoxGeometry(size, size, size);
    this.baseCube = new THREE.Mesh(
      geometry,
      new THREE.MeshStandardMaterial({ color: 0x9a9a9a }),
    );
    this.baseCube.position.set(...this.params.base_center);
    this.movableCube = new THREE.Mesh(
      geometry.clone(),
      new THREE.MeshStandardMaterial({ color: 0x3b7de0 }),
    );
    this.movableCube.position.set(...this.params.movable_center);
    this.scene.add(this.baseCube, this.movableCube);
    this.onStatus?.(`touch the blue cube: ${type.replaceAll("_", " ")}`);
  }

  private ndc(event: PointerEvent): THREE.Vector2 {
    const rect = this.renderer.domElement.getBoundingClientRect();
    return new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
  }

  private beginDrag(event: PointerEvent): void {
    if (!this.movableCube) return;
    this.raycaster.setFromCamera(this.ndc(event), this.camera);
    const hits = this.raycaster.intersectObject(this.movableCube);
    if (hits.length) {
      this.dragStart = { point: hits[0].point.clone(), at: performance.now() };
    }
  }

  private endDrag(event: PointerEvent): void {
    if (!this.dragStart || !this.params) return;
    const start = this.dragStart;
    this.dragStart = null;
    // project the release point onto the plane through the grab point
    this.raycaster.setFromCamera(this.ndc(event), this.camera);
    const plane = new THREE.Plane().setFromNormalAndCoplanarPoint(
      this.camera.getWorldDirection(new THREE.Vector3()),
      start.point,
    );
    const end = new THREE.Vector3();
    if (!this.raycaster.ray.intersectPlane(plane, end)) return;
    const delta = end.clone().sub(start.point);
    const distance = delta.length();
    if (distance < 1e-4) return;
    const drag: DragSample = {
      origin: [start.point.x, start.point.y, start.point.z],
      direction: [delta.x / distance, delta.y / distance, delta.z / distance],
      distance,
      duration: Math.max((performance.now() - start.at) / 1000, 1 / 60),
    };
    void this.runPreview(drag);
  }

  async runPreview(drag: DragSample): Promise<number> {
    if (!this.params) throw new Error("no joint selected");
    const run = buildPreviewRun(this.params.type, this.resistance, drag);
    const sentAt = performance.now();
    await this.api.simulate({
      duration: run.duration,
      script: run.script,
      preview: run.preview,
    });
    const orientations: [number, number, number, number][] = [];
    let firstFrame = true;
    await new Promise<void>((resolve) => {
      openFrameStream(wsBaseFrom(this.httpBase), {
        onFrame: (frame) => {
          if (firstFrame) {
            this.latencySamples.push(performance.now() - sentAt);
            firstFrame = false;
          }
          const pose = frame.poses["movable"];
          if (pose && this.movableCube) {
            applyPose(this.movableCube, pose);
            orientations.push(pose.orientation);
          }
        },
        onSummary: () => resolve(),
      });
    });
    this.lastDeflection = maxDeflection(orientations);
    this.onStatus?.(
      `max swing ${(this.lastDeflection * 57.2958).toFixed(1)} deg (${this.resistance})`,
    );
    return this.lastDeflection;
  }

  medianLatencyMs(): number {
    if (!this.latencySamples.length) return 0;
    const sorted = [...this.latencySamples].sort((a, b) => a - b);
    return sorted[Math.floor(sorted.length / 2)];
  }
}
