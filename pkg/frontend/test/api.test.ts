// Request-log audit: a scripted UI session issues every mutation the UI
// can produce; each recorded request must match the documented endpoint
// table (docs/api.md).

import { describe, expect, it } from "vitest";
import { ApiClient, DOCUMENTED_ENDPOINTS, matchesDocumented, type Transport } from "../src/api";

function recordingTransport(): { transport: Transport; seen: string[] } {
  const seen: string[] = [];
  const transport: Transport = async (method, path) => {
    seen.push(`${method} ${path}`);
    // canned minimal responses keyed by endpoint shape
    if (method === "GET" && path === "/scene") {
      return { scene: { version: "1.0", name: "x", segments: [], joints: [], widgets: [], bindings: [], sim: { dt: 1 / 120, gravity: [0, -9.81, 0], ground_plane: false, seed: 42 } }, scene_version: 0 };
    }
    if (path.endsWith("/mesh")) {
      return { segment: "s", label: "auto-0", mesh: { vertices: [], triangles: [], materials: null, watertight: true } };
    }
    return { scene_version: 1, segments: [], widget: "w0", joint: "j0", content: "c0", kind: "video", started: true, frame_stride: 4, violations: [], path: "/tmp/x", k: 2, method: "auto" };
  };
  return { transport, seen };
}

describe("endpoint audit", () => {
  it("every UI mutation maps to a documented endpoint", async () => {
    const { transport, seen } = recordingTransport();
    const api = new ApiClient(transport);

    // scripted session covering the full authoring surface
    await api.getScene();
    await api.getSegmentMesh("tv.pos");
    await api.getJointPreview("hinge");
    await api.uploadSegment(new Blob([new Uint8Array([118])]), "tv");
    await api.slice("tv", [0.15, 0.15, 0], [1, 0, 0]);
    await api.segmentAuto({ segment: "tv.neg", k: 3, seed: 42 });
    await api.addJoint({ type: "hinge", base: "tv.neg", movable: "tv.pos", auto_frame: true });
    await api.addWidget({ category: "knob", segment: "tv.pos" });
    await api.patchWidget("w0", { visible: false });
    await api.patchWidget("w0", { segment: "tv.neg" });
    await api.uploadContent(new Blob([new Uint8Array([3])]), "clip.mp4");
    await api.bindContent({ content: "c0", target_kind: "scene", target_id: "", role: "playback-source" });
    await api.undo();
    await api.save();
    await api.validate();
    await api.simulate({ duration: 1, script: [] });
    await api.getLatestRun();

    expect(seen.length).toBeGreaterThanOrEqual(17);
    for (const entry of seen) {
      const [method, path] = entry.split(" ");
      expect(matchesDocumented(method, path), `undocumented: ${entry}`).toBe(true);
    }
    // and the client's own log matches what went over the wire
    expect(api.log.map((r) => `${r.method} ${r.path}`)).toEqual(seen);
  });

  it("rejects paths outside the documented table", () => {
    expect(matchesDocumented("POST", "/scene")).toBe(false);
    expect(matchesDocumented("DELETE", "/widgets/w0")).toBe(false);
    expect(matchesDocumented("GET", "/segments/a/b/mesh")).toBe(false);
    expect(matchesDocumented("PATCH", "/widgets/w0")).toBe(true);
    expect(matchesDocumented("GET", "/segments/tv.pos/mesh")).toBe(true);
  });

  it("documents exactly the endpoints in docs/api.md", () => {
    // table pinned: additions must be documented before the UI may call them
    expect(DOCUMENTED_ENDPOINTS.length).toBe(16);
  });
});
