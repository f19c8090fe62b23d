// Entry point: wire API client, store, viewer, joint preview and panels.
// Truth lives on the service; reloading this page reconstructs the
// identical scene from GET /scene.

import { ApiClient, fetchTransport } from "./api";
import { JointPreviewPanel } from "./jointPreview";
import { buildPanels, statusBar } from "./panels";
import { SceneStore } from "./store";
import { Viewer } from "./viewer";

const httpBase = import.meta.env?.VITE_IDI_SERVICE ?? "http://127.0.0.1:7311";

async function boot(): Promise<void> {
  const api = new ApiClient(fetchTransport(httpBase));
  const store = new SceneStore(api);
  const canvas = document.getElementById("viewport") as HTMLCanvasElement;
  const previewCanvas = document.getElementById("joint-preview") as HTMLCanvasElement;
  const panelRoot = document.getElementById("panels") as HTMLElement;
  const status = statusBar();
  document.getElementById("statusbar")!.append(status.node);

  const viewer = new Viewer(store, canvas);
  const preview = new JointPreviewPanel(api, httpBase, previewCanvas);
  preview.onStatus = status.set;
  buildPanels(panelRoot, store, viewer, preview, httpBase, status.set);

  try {
    await store.refresh();
    status.set(`scene "${store.scene?.name}" loaded (version ${store.sceneVersion})`);
  } catch (error) {
    status.set(`service unreachable at ${httpBase} - start it with: idi serve`);
    document.body.classList.add("offline");
  }
}

void boot();
