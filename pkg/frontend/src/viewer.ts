// The main 3D canvas: orbit controls, raycast picking, segment meshes,
// cut-plane helper, live pose streaming.

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";
import {
  applyPose,
  buildSegmentGeometry,
  buildSegmentMesh,
  buildSlicePreviewGeometry,
  segmentColor,
  setHighlight,
} from "./mesh3d";
import type { SceneStore } from "./store";
import type { FrameMessage } from "./types";

export class Viewer {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly controls: OrbitControls;
  readonly segmentMeshes = new Map<string, THREE.Mesh>();
  readonly planeHelper: THREE.Mesh;
  onPick: ((segmentId: string, point: THREE.Vector3, event: PointerEvent) => void) | null = null;

  private raycaster = new THREE.Raycaster();

  constructor(
    private store: SceneStore,
    canvas: HTMLCanvasElement,
  ) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.001, 100);
    this.camera.position.set(0.5, 0.4, 0.9);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.enableDamping = true;

    this.scene.background = new THREE.Color(0x16181d);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.55));
    const key = new THREE.DirectionalLight(0xffffff, 1.4);
    key.position.set(1, 2, 1.5);
    this.scene.add(key);
    this.scene.add(new THREE.GridHelper(2, 20, 0x333944, 0x23262e));

    this.planeHelper = new THREE.Mesh(
      new THREE.PlaneGeometry(0.5, 0.5),
      new THREE.MeshBasicMaterial({
        color: 0x55aaff,
        opacity: 0.25,
        transparent: true,
        side: THREE.DoubleSide,
      }),
    );
    this.planeHelper.visible = false;
    this.scene.add(this.planeHelper);

    canvas.addEventListener("pointerdown", (event) => this.pick(event));
    store.subscribe(() => this.sync());
    this.resize();
    window.addEventListener("resize", () => this.resize());
    this.renderer.setAnimationLoop(() => {
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    });
  }

  resize(): void {
    const canvas = this.renderer.domElement;
    const width = canvas.clientWidth || canvas.parentElement?.clientWidth || 800;
    const height = canvas.clientHeight || 560;
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  /** Rebuild meshes to mirror the store (cheap diff by segment id). */
  sync(): void {
    const wanted = new Set(this.store.segmentIds());
    for (const [id, mesh] of this.segmentMeshes) {
      if (!wanted.has(id)) {
        this.scene.remove(mesh);
        mesh.geometry.dispose();
        this.segmentMeshes.delete(id);
      }
    }
    let index = 0;
    for (const id of this.store.segmentIds()) {
      const payload = this.store.meshes.get(id);
      if (payload && !this.segmentMeshes.has(id)) {
        const mesh = buildSegmentMesh(payload, index);
        mesh.userData.segmentId = id;
        this.scene.add(mesh);
        this.segmentMeshes.set(id, mesh);
      }
      index += 1;
    }
    for (const [id, mesh] of this.segmentMeshes) {
      const draft = this.store.jointDraft;
      if (id === draft.base) setHighlight(mesh, "base");
      else if (id === draft.movable) setHighlight(mesh, "movable");
      else if (id === this.store.selection) setHighlight(mesh, "selected");
      else setHighlight(mesh, "none");
    }
    this.syncPlaneHelper();
  }

  syncPlaneHelper(): void {
    const show = this.store.tool === "slice";
    this.planeHelper.visible = show;
    if (!show) return;
    const { point, normal } = this.store.planeGizmo;
    this.planeHelper.position.set(...point);
    const toward = new THREE.Vector3(...normal).normalize();
    this.planeHelper.quaternion.setFromUnitVectors(new THREE.Vector3(0, 0, 1), toward);
  }

  pick(event: PointerEvent): void {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObjects([...this.segmentMeshes.values()]);
    if (hits.length && this.onPick) {
      const id = hits[0].object.userData.segmentId as string;
      this.onPick(id, hits[0].point, event);
    }
  }

  /** Recolor one segment by cut-plane side (preview only; nothing cut). */
  showSlicePreview(segmentId: string): void {
    const mesh = this.segmentMeshes.get(segmentId);
    const payload = this.store.meshes.get(segmentId);
    if (!mesh || !payload) return;
    mesh.geometry.dispose();
    mesh.geometry = buildSlicePreviewGeometry(payload, this.store.planeGizmo);
  }

  clearSlicePreview(segmentId: string, index: number): void {
    const mesh = this.segmentMeshes.get(segmentId);
    const payload = this.store.meshes.get(segmentId);
    if (!mesh || !payload) return;
    mesh.geometry.dispose();
    mesh.geometry = buildSegmentGeometry(payload, segmentColor(index));
  }

  applyFrame(frame: FrameMessage): void {
    for (const [segmentId, pose] of Object.entries(frame.poses)) {
      const mesh = this.segmentMeshes.get(segmentId);
      if (mesh) applyPose(mesh, pose);
    }
  }

  /** Drop streamed poses and return meshes to their authored rest pose. */
  resetPoses(): void {
    for (const mesh of this.segmentMeshes.values()) {
      mesh.position.set(0, 0, 0);
      mesh.quaternion.identity();
    }
  }
}
