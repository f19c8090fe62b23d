// Mesh payload -> three.js geometry. Segments are tinted from a fixed
// palette; cross-section cap faces (reserved material id -1) are
// highlighted so fresh cuts read clearly.

import * as THREE from "three";
import type { MeshPayload, PoseDoc } from "./types";

export const CAP_MATERIAL_ID = -1;

const PALETTE = [
  0x6fa8dc, 0x93c47d, 0xf6b26b, 0xc27ba0, 0x76a5af, 0xffd966, 0x8e7cc3,
  0xe06666, 0x45818e, 0xa64d79,
];
const CAP_COLOR = new THREE.Color(0xff5533);

export function segmentColor(index: number): THREE.Color {
  return new THREE.Color(PALETTE[index % PALETTE.length]);
}

/** Non-indexed geometry with per-face vertex colors (tint + cap highlight). */
export function buildSegmentGeometry(
  payload: MeshPayload,
  tint: THREE.Color,
): THREE.BufferGeometry {
  const triCount = payload.triangles.length;
  const positions = new Float32Array(triCount * 9);
  const colors = new Float32Array(triCount * 9);
  for (let t = 0; t < triCount; t++) {
    const isCap = payload.materials !== null && payload.materials[t] === CAP_MATERIAL_ID;
    const color = isCap ? CAP_COLOR : tint;
    for (let k = 0; k < 3; k++) {
      const v = payload.vertices[payload.triangles[t][k]];
      const at = t * 9 + k * 3;
      positions[at] = v[0];
      positions[at + 1] = v[1];
      positions[at + 2] = v[2];
      colors[at] = color.r;
      colors[at + 1] = color.g;
      colors[at + 2] = color.b;
    }
  }
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
  geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
  geometry.computeVertexNormals();
  return geometry;
}

/**
 * Slice preview: recolor triangles by which side of the cut plane their
 * centroid falls on. Nothing is cut until the user commits -- the preview
 * only tints the two future halves.
 */
export function buildSlicePreviewGeometry(
  payload: MeshPayload,
  plane: { point: [number, number, number]; normal: [number, number, number] },
): THREE.BufferGeometry {
  const positive = new THREE.Color(0x7fb2e5);
  const negative = new THREE.Color(0xe5a97f);
  const triCount = payload.triangles.length;
  const positions = new Float32Array(triCount * 9);
  const colors = new Float32Array(triCount * 9);
  for (let t = 0; t < triCount; t++) {
    let side = 0;
    for (let k = 0; k < 3; k++) {
      const v = payload.vertices[payload.triangles[t][k]];
      side +=
        (v[0] - plane.point[0]) * plane.normal[0] +
        (v[1] - plane.point[1]) * plane.normal[1] +
        (v[2] - plane.point[2]) * plane.normal[2];
    }
    const color = side >= 0 ? positive : negative;
    for (let k = 0; k < 3; k++) {
      const v = payload.vertices[payload.triangles[t][k]];
      const at = t * 9 + k * 3;
      positions[at] = v[0];
      positions[at + 1] = v[1];
      positions[at + 2] = v[2];
      colors[at] = color.r;
      colors[at + 1] = color.g;
      colors[at + 2] = color.b;
    }
  }
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
  geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
  geometry.computeVertexNormals();
  return geometry;
}

export function buildSegmentMesh(payload: MeshPayload, index: number): THREE.Mesh {
  const material = new THREE.MeshStandardMaterial({
    vertexColors: true,
    roughness: 0.75,
    metalness: 0.05,
  });
  const mesh = new THREE.Mesh(buildSegmentGeometry(payload, segmentColor(index)), material);
  mesh.matrixAutoUpdate = true;
  return mesh;
}

/**
 * Apply a streamed pose. Trajectories are for the center of mass of a
 * body whose geometry is authored in scene coordinates, so the transform
 * is v -> R (v - com_rest) + position.
 */
export function applyPose(object: THREE.Object3D, pose: PoseDoc): void {
  const [qw, qx, qy, qz] = pose.orientation;
  const rotation = new THREE.Quaternion(qx, qy, qz, qw);
  const com = new THREE.Vector3(...pose.com_rest);
  const position = new THREE.Vector3(...pose.position);
  object.quaternion.copy(rotation);
  object.position.copy(position.sub(com.clone().applyQuaternion(rotation)));
}

/** Tint a preview highlight (selection / base / movable picks). */
export function setHighlight(mesh: THREE.Mesh, mode: "none" | "selected" | "base" | "movable"): void {
  const material = mesh.material as THREE.MeshStandardMaterial;
  switch (mode) {
    case "selected":
      material.emissive.setHex(0x335577);
      break;
    case "base":
      material.emissive.setHex(0x444444);
      break;
    case "movable":
      material.emissive.setHex(0x1133aa);
      break;
    default:
      material.emissive.setHex(0x000000);
  }
}
