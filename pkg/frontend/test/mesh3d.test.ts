import { describe, expect, it } from "vitest";
import { buildSegmentGeometry, segmentColor, CAP_MATERIAL_ID } from "../src/mesh3d";
import type { MeshPayload } from "../src/types";

const PAYLOAD: MeshPayload = {
  vertices: [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
  ],
  triangles: [
    [0, 1, 2],
    [0, 1, 3],
  ],
  materials: [0, CAP_MATERIAL_ID],
  watertight: false,
};

describe("segment geometry", () => {
  it("expands to per-face vertices with normals", () => {
    const geometry = buildSegmentGeometry(PAYLOAD, segmentColor(0));
    expect(geometry.getAttribute("position").count).toBe(6);
    expect(geometry.getAttribute("normal").count).toBe(6);
  });

  it("highlights cap faces and tints the rest", () => {
    const tint = segmentColor(2);
    const geometry = buildSegmentGeometry(PAYLOAD, tint);
    const colors = geometry.getAttribute("color");
    // face 0: segment tint
    expect(colors.getX(0)).toBeCloseTo(tint.r, 6);
    expect(colors.getY(0)).toBeCloseTo(tint.g, 6);
    // face 1 (cap): highlight differs from the tint
    const capR = colors.getX(3);
    const capG = colors.getY(3);
    expect(Math.abs(capR - tint.r) + Math.abs(capG - tint.g)).toBeGreaterThan(0.1);
    // all three vertices of the cap share the highlight
    expect(colors.getX(4)).toBeCloseTo(capR, 6);
    expect(colors.getX(5)).toBeCloseTo(capR, 6);
  });

  it("palette cycles deterministically", () => {
    expect(segmentColor(0).getHex()).toBe(segmentColor(10).getHex());
    expect(segmentColor(1).getHex()).not.toBe(segmentColor(2).getHex());
  });
});

describe("slice preview recoloring", () => {
  it("tints triangles by cut-plane side without altering geometry", async () => {
    const { buildSlicePreviewGeometry } = await import("../src/mesh3d");
    const geometry = buildSlicePreviewGeometry(PAYLOAD, {
      point: [0, 0, 0.2],
      normal: [0, 0, 1],
    });
    expect(geometry.getAttribute("position").count).toBe(6);
    const colors = geometry.getAttribute("color");
    // face 0 lies in z=0 (negative side); face 1's summed distance is
    // positive (one vertex at z=1 outweighs two at z=0 against z=0.2)
    const face0 = [colors.getX(0), colors.getY(0), colors.getZ(0)];
    const face1 = [colors.getX(3), colors.getY(3), colors.getZ(3)];
    expect(face0).not.toEqual(face1);
    // positions are untouched: first vertex of face 0 is still the origin
    expect(geometry.getAttribute("position").getX(0)).toBe(0);
  });
});
