// Tool panels: plain DOM, one section per authoring mode. Every action
// funnels through SceneStore.mutate -> ApiClient, so the endpoint audit
// covers the whole surface.

import type { SceneStore, ToolMode } from "./store";
import type { Viewer } from "./viewer";
import type { JointPreviewPanel } from "./jointPreview";
import type { JointTypeName, Vec3 } from "./types";
import { dragToTouchScript } from "./preview";
import { openFrameStream, wsBaseFrom } from "./stream";

const JOINT_TYPES: JointTypeName[] = [
  "pivot",
  "ball_and_socket",
  "hinge",
  "condyloid",
  "plane",
  "saddle",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (HTMLElement | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) node.append(child);
  return node;
}

export function statusBar(): { node: HTMLElement; set: (text: string) => void } {
  const node = el("div", { class: "status" }, "ready");
  return { node, set: (text) => (node.textContent = text) };
}

export function buildPanels(
  root: HTMLElement,
  store: SceneStore,
  viewer: Viewer,
  preview: JointPreviewPanel,
  httpBase: string,
  setStatus: (text: string) => void,
): void {
  const tools: ToolMode[] = ["slice", "segment", "joint", "widget", "content", "simulate"];
  const toolbar = el("div", { class: "toolbar" });
  for (const tool of tools) {
    const button = el("button", { "data-tool": tool }, tool);
    button.onclick = () => {
      store.setTool(tool);
      render();
    };
    toolbar.append(button);
  }
  const undoButton = el("button", {}, "undo");
  undoButton.onclick = () =>
    store
      .mutate((api) => api.undo())
      .then(() => setStatus("undone"))
      .catch((error) => setStatus(String(error)));
  const saveButton = el("button", {}, "save");
  saveButton.onclick = () =>
    store.api
      .save()
      .then((result) => setStatus(`saved ${result.path}`))
      .catch((error) => setStatus(String(error)));
  toolbar.append(undoButton, saveButton);

  const body = el("div", { class: "panel-body" });
  root.append(toolbar, body);

  const planeInputs: Record<string, HTMLInputElement> = {};

  function vecInputs(labels: string[], defaults: number[]): HTMLElement {
    const row = el("div", { class: "vec-row" });
    labels.forEach((label, i) => {
      const input = el("input", { type: "number", step: "0.01", value: String(defaults[i]) });
      planeInputs[label] = input;
      row.append(el("label", {}, label), input);
    });
    return row;
  }

  function readPlane(): { point: Vec3; normal: Vec3 } {
    const value = (key: string) => Number(planeInputs[key]?.value ?? 0);
    return {
      point: [value("px"), value("py"), value("pz")],
      normal: [value("nx"), value("ny"), value("nz")],
    };
  }

  function renderSliceTool(): HTMLElement {
    const section = el("div", {});
    section.append(
      el("p", {}, "adjust the cut plane, preview the recoloring, then commit"),
      vecInputs(["px", "py", "pz"], store.planeGizmo.point),
      vecInputs(["nx", "ny", "nz"], store.planeGizmo.normal),
    );
    const previewButton = el("button", {}, "preview plane");
    previewButton.onclick = () => {
      const { point, normal } = readPlane();
      store.planeGizmo = { point, normal };
      viewer.sync();
      if (store.selection) viewer.showSlicePreview(store.selection);
      setStatus("recolored along the plane; nothing cut yet");
    };
    const commit = el("button", {}, "slice selected segment");
    commit.onclick = () => {
      const segment = store.selection;
      if (!segment) return setStatus("pick a segment first");
      const { point, normal } = readPlane();
      store
        .mutate((api) => api.slice(segment, point, normal))
        .then((result) => setStatus(`new segments: ${result.segments.join(", ")}`))
        .catch((error) => setStatus(String(error)));
    };
    section.append(previewButton, commit);
    return section;
  }

  function renderSegmentTool(): HTMLElement {
    const section = el("div", {});
    const kInput = el("input", { type: "number", value: "", placeholder: "auto" });
    const deltaInput = el("input", { type: "number", step: "0.1", value: "0.5" });
    const seedInput = el("input", { type: "number", value: "42" });
    const go = el("button", {}, "auto-segment selected");
    go.onclick = () => {
      const segment = store.selection ?? undefined;
      const k = kInput.value ? Number(kInput.value) : null;
      store
        .mutate((api) =>
          api.segmentAuto({ segment, k, delta: Number(deltaInput.value), seed: Number(seedInput.value) }),
        )
        .then((result) => setStatus(`k=${result.k}: ${result.segments.join(", ")}`))
        .catch((error) => setStatus(String(error)));
    };
    section.append(
      el("p", {}, "spectral auto-segmentation"),
      el("label", {}, "k"), kInput,
      el("label", {}, "delta"), deltaInput,
      el("label", {}, "seed"), seedInput,
      go,
    );
    return section;
  }

  function renderJointTool(): HTMLElement {
    const section = el("div", {});
    const typeSelect = el("select", {});
    for (const type of JOINT_TYPES) typeSelect.append(el("option", { value: type }, type));
    typeSelect.value = store.jointDraft.type;
    typeSelect.onchange = () => {
      store.jointDraft.type = typeSelect.value as JointTypeName;
      void preview.show(store.jointDraft.type);
    };
    const resistanceSelect = el("select", {});
    for (const level of ["low", "medium", "high"]) {
      resistanceSelect.append(el("option", { value: level }, level));
    }
    resistanceSelect.value = store.jointDraft.resistance;
    resistanceSelect.onchange = () => {
      store.jointDraft.resistance = resistanceSelect.value as "low" | "medium" | "high";
      preview.resistance = store.jointDraft.resistance;
    };
    const baseButton = el("button", {}, "set base = selection");
    const movableButton = el("button", {}, "set movable = selection");
    const picked = el("p", {}, pickedText());
    function pickedText(): string {
      return `base: ${store.jointDraft.base ?? "?"}  movable: ${store.jointDraft.movable ?? "?"}`;
    }
    baseButton.onclick = () => {
      if (!store.selection) return setStatus("pick a segment first");
      const problem = store.pickJointSide("base", store.selection);
      if (problem) return setStatus(problem);
      picked.textContent = pickedText();
      viewer.sync();
    };
    movableButton.onclick = () => {
      if (!store.selection) return setStatus("pick a segment first");
      const problem = store.pickJointSide("movable", store.selection);
      if (problem) return setStatus(problem);
      picked.textContent = pickedText();
      viewer.sync();
    };
    const apply = el("button", {}, "apply joint");
    apply.onclick = () => {
      const { type, base, movable, resistance } = store.jointDraft;
      if (!base || !movable) return setStatus("pick base and movable segments");
      store
        .mutate((api) => api.addJoint({ type, base, movable, resistance, auto_frame: true }))
        .then((result) => setStatus(`joint ${result.joint} applied`))
        .catch((error) => setStatus(String(error)));
    };
    section.append(
      el("p", {}, "touch the blue cube to observe each joint's movement"),
      typeSelect,
      resistanceSelect,
      baseButton,
      movableButton,
      picked,
      apply,
    );
    void preview.show(store.jointDraft.type);
    return section;
  }

  function renderWidgetTool(): HTMLElement {
    const section = el("div", {});
    const categorySelect = el("select", {});
    for (const category of ["knob", "screen", "slider", "button"]) {
      categorySelect.append(el("option", { value: category }, category));
    }
    const add = el("button", {}, "add widget on selection");
    add.onclick = () => {
      if (!store.selection) return setStatus("pick a host segment first");
      const segment = store.selection;
      store
        .mutate((api) =>
          api.addWidget({ category: categorySelect.value as never, segment }),
        )
        .then((result) => setStatus(`widget ${result.widget}`))
        .catch((error) => setStatus(String(error)));
    };
    section.append(categorySelect, add);
    const list = el("div", {});
    for (const widget of store.scene?.widgets ?? []) {
      const toggle = el(
        "button",
        {},
        `${widget.id} (${widget.category}) ${widget.visible ? "hide" : "show"}`,
      );
      toggle.onclick = () =>
        store
          .mutate((api) => api.patchWidget(widget.id, { visible: !widget.visible }))
          .then(() => setStatus(`${widget.id} ${widget.visible ? "hidden" : "shown"}`))
          .catch((error) => setStatus(String(error)));
      list.append(toggle);
    }
    section.append(list);
    return section;
  }

  function renderContentTool(): HTMLElement {
    const section = el("div", {});
    const fileInput = el("input", { type: "file" });
    const upload = el("button", {}, "upload");
    upload.onclick = () => {
      const file = fileInput.files?.[0];
      if (!file) return setStatus("choose a file");
      store
        .mutate((api) => api.uploadContent(file, file.name))
        .then((result) => setStatus(`content ${result.content} (${result.kind})`))
        .catch((error) => setStatus(String(error)));
    };
    const bindRow = el("div", {});
    const contentInput = el("input", { placeholder: "content id" });
    const bind = el("button", {}, "bind to scene");
    bind.onclick = () =>
      store
        .mutate((api) =>
          api.bindContent({
            content: contentInput.value,
            target_kind: "scene",
            target_id: "",
            role: "playback-source",
          }),
        )
        .then(() => setStatus("bound"))
        .catch((error) => setStatus(String(error)));
    bindRow.append(contentInput, bind);
    section.append(fileInput, upload, bindRow);
    return section;
  }

  function renderSimulateTool(): HTMLElement {
    const section = el("div", {});
    section.append(el("p", {}, "drag on a segment to poke it"));
    const run = el("button", {}, "run empty 2 s scene replay");
    run.onclick = () => runScript([], 2.0);
    section.append(run);
    return section;
  }

  function runScript(script: ReturnType<typeof dragToTouchScript>, duration: number): void {
    store.api
      .simulate({ duration, script })
      .then(() => {
        openFrameStream(wsBaseFrom(httpBase), {
          onFrame: (frame) => viewer.applyFrame(frame),
          onSummary: (summary) => {
            setStatus(summary.error ? `run failed: ${summary.error}` : "run complete");
            void store.refresh();
          },
        });
      })
      .catch((error) => setStatus(String(error)));
  }

  // simulate-mode poking: pointer drag on a segment becomes a touch sweep
  let dragAnchor: { point: Vec3; at: number } | null = null;
  viewer.onPick = (segmentId, point, event) => {
    if (store.tool === "simulate") {
      dragAnchor = { point: [point.x, point.y, point.z], at: performance.now() };
      const onUp = (up: PointerEvent) => {
        window.removeEventListener("pointerup", onUp);
        if (!dragAnchor) return;
        const seconds = Math.max((performance.now() - dragAnchor.at) / 1000, 1 / 30);
        const dx = (up.clientX - event.clientX) / 600;
        const dy = -(up.clientY - event.clientY) / 600;
        const distance = Math.hypot(dx, dy);
        if (distance < 1e-3) return;
        const script = dragToTouchScript({
          origin: dragAnchor.point,
          direction: [dx / distance, dy / distance, 0],
          distance,
          duration: seconds,
        });
        runScript(script, script[script.length - 1].time + 2.0);
        dragAnchor = null;
      };
      window.addEventListener("pointerup", onUp);
    } else {
      store.select(segmentId);
      render();
    }
  };

  function render(): void {
    for (const button of toolbar.querySelectorAll("button[data-tool]")) {
      button.classList.toggle("active", button.getAttribute("data-tool") === store.tool);
    }
    body.replaceChildren();
    switch (store.tool) {
      case "slice":
        body.append(renderSliceTool());
        break;
      case "segment":
        body.append(renderSegmentTool());
        break;
      case "joint":
        body.append(renderJointTool());
        break;
      case "widget":
        body.append(renderWidgetTool());
        break;
      case "content":
        body.append(renderContentTool());
        break;
      case "simulate":
        body.append(renderSimulateTool());
        break;
    }
  }

  store.subscribe(() => {
    // list-style panels mirror scene contents
    if (store.tool === "widget") render();
  });
  render();
}
