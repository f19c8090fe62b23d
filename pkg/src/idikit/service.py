"""Local authoring gateway: HTTP for scene mutations, WebSocket for live
simulation frames.

The service is a thin shell over the library: every endpoint validates
input, calls the corresponding core function, bumps the scene version and
returns JSON. Mutations are serialized behind one lock and every mutation
pushes an undo snapshot (bounded stack). Simulations run on a worker
thread against an immutable scene snapshot; frames stream at a decimated
rate while the full-rate trajectory is always recorded server-side.
"""

from __future__ import annotations

import asyncio
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from . import primitives
from .content import ContentStore, bind_content
from .errors import IdiError, ValidationFailureError
from .harness import EventScript, parse_event, run
from .mesh import import_mesh
from .physics import (
    JointSpec,
    JointType,
    RESISTANCE_PRESETS,
    attach_joint,
    frame_for_type,
    infer_joint_frame,
)
from .scene import (
    IdiScene,
    SceneSegment,
    load_scene,
    save_scene,
    scene_document,
    validate_scene,
)
from .slicer import CutPlane, slice_by_plane
from .spectral import segment_auto, segments_from_labels
from .widgets import Placement, attach_widget, set_visibility, spawn_widget

UNDO_LIMIT = 50
PREVIEW_CUBE = 0.1  # m, edge length of the two-cube joint preview
# (large enough that the resistance presets produce visibly different swings)


@dataclass
class SimulationRun:
    thread: threading.Thread
    frames: list = field(default_factory=list)
    done: threading.Event = field(default_factory=threading.Event)
    error: str | None = None
    report_doc: dict | None = None


@dataclass
class SessionState:
    scene: IdiScene
    scene_path: str | None = None
    content_dir: str = ""
    version: int = 0
    undo_stack: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    running: SimulationRun | None = None
    last_report: dict | None = None

    def mutate(self, new_scene: IdiScene) -> int:
        self.undo_stack.append(self.scene)
        if len(self.undo_stack) > UNDO_LIMIT:
            self.undo_stack.pop(0)
        self.scene = new_scene
        self.version += 1
        return self.version


def preview_scene(joint_type: JointType, resistance: str = "low") -> IdiScene:
    """Two-cube demo: grey base cube on top, blue movable cube below,
    joined by the requested joint at their interface."""
    base = primitives.box(size=(PREVIEW_CUBE,) * 3, center=(0, PREVIEW_CUBE / 2, 0))
    movable = primitives.box(size=(PREVIEW_CUBE,) * 3, center=(0, -PREVIEW_CUBE / 2, 0))
    scene = IdiScene(
        name=f"preview-{joint_type.value}",
        segments=(SceneSegment("base", base), SceneSegment("movable", movable)),
    )
    axes = frame_for_type(joint_type, np.array([[0.0, 0, 1], [1.0, 0, 0], [0.0, 1, 0]]))
    return attach_joint(scene, JointSpec(
        joint_id="preview",
        joint_type=joint_type,
        base="base",
        movable="movable",
        anchor=np.zeros(3),
        axes=axes,
        resistance=resistance,
    ))


def _error_response(exc: IdiError) -> JSONResponse:
    status = 404 if exc.unknown_entity else 400
    body = {"error": exc.code, "detail": str(exc)}
    if isinstance(exc, ValidationFailureError):
        body["violations"] = exc.violations
    return JSONResponse(status_code=status, content=body)


def _mesh_document(mesh) -> dict:
    return {
        "vertices": [[float(x) for x in v] for v in mesh.vertices],
        "triangles": [[int(i) for i in t] for t in mesh.triangles],
        "materials": None if mesh.materials is None else [int(m) for m in mesh.materials],
        "watertight": mesh.watertight,
    }


def _frame_document(state, playback, effects) -> dict:
    return {
        "type": "frame",
        "step": state.step_index,
        "time": state.time,
        "poses": {
            sid: {
                "position": [float(x) for x in b.position],
                "orientation": [float(x) for x in b.orientation],
                "com_rest": [float(x) for x in b.com_rest],
            }
            for sid, b in state.bodies.items()
        },
        "playback": {
            "selected": playback.selected,
            "playing": dict(playback.playing),
            "volumes": dict(playback.volumes),
        },
        "effects": [
            {"action": e.action, "content": e.content, "parameter": e.parameter,
             "widget": e.widget, "time": e.time}
            for e in effects
        ],
    }


def create_app(scene_path: str | None = None) -> FastAPI:
    app = FastAPI(title="idi authoring service", docs_url=None, redoc_url=None)

    if scene_path and os.path.exists(scene_path):
        scene = load_scene(scene_path)
        content_dir = os.path.join(os.path.dirname(os.path.abspath(scene_path)), "content")
    else:
        scene = IdiScene(name="untitled")
        content_dir = tempfile.mkdtemp(prefix="idi-content-")
    session = SessionState(scene=scene, scene_path=scene_path, content_dir=content_dir)
    app.state.session = session

    @app.exception_handler(IdiError)
    async def idi_error_handler(request: Request, exc: IdiError):
        return _error_response(exc)

    # ------------------------------------------------------------------ reads

    @app.get("/scene")
    def get_scene():
        doc = scene_document(session.scene)
        return {"scene": doc, "scene_version": session.version}

    @app.get("/segments/{segment_id}/mesh")
    def get_segment_mesh(segment_id: str):
        seg = session.scene.segment(segment_id)
        if seg is None:
            return JSONResponse(status_code=404,
                                content={"error": "UnknownSegment", "detail": segment_id})
        return {"segment": segment_id, "label": seg.label, "mesh": _mesh_document(seg.mesh)}

    @app.get("/joints/preview/{type_name}")
    def get_joint_preview(type_name: str):
        try:
            joint_type = JointType(type_name)
        except ValueError:
            return JSONResponse(status_code=404,
                                content={"error": "UnknownJoint", "detail": type_name})
        return {
            "type": joint_type.value,
            "cube_size": PREVIEW_CUBE,
            "base_center": [0, PREVIEW_CUBE / 2, 0],
            "movable_center": [0, -PREVIEW_CUBE / 2, 0],
            "anchor": [0, 0, 0],
            "free_rotation_axes": list(joint_type.free_rot_axes),
            "free_translation_axes": list(joint_type.free_trans_axes),
            "limits": {str(k): list(v) for k, v in joint_type.default_limits.items()},
            "resistances": RESISTANCE_PRESETS,
        }

    @app.get("/runs/latest")
    def get_latest_run():
        if session.last_report is None:
            return JSONResponse(status_code=404,
                                content={"error": "NoRuns", "detail": "no completed run"})
        return session.last_report

    # -------------------------------------------------------------- mutations

    @app.post("/segments")
    async def post_segment(file: UploadFile = File(...), name: str = Form(None)):
        suffix = os.path.splitext(file.filename or "mesh.obj")[1] or ".obj"
        with tempfile.NamedTemporaryFile(suffix=suffix, delete=False) as tmp:
            tmp.write(await file.read())
            tmp_path = tmp.name
        try:
            mesh = import_mesh(tmp_path)
        finally:
            os.unlink(tmp_path)
        with session.lock:
            segment_id = name or os.path.splitext(os.path.basename(file.filename or "segment"))[0]
            if session.scene.segment(segment_id) is not None:
                return JSONResponse(status_code=400, content={
                    "error": "DuplicateSegment", "detail": segment_id})
            version = session.mutate(
                session.scene.add_segment(SceneSegment(segment_id, mesh, "auto-0"))
            )
        return {"segment": segment_id, "triangles": len(mesh.triangles),
                "scene_version": version}

    @app.post("/slice")
    def post_slice(body: dict):
        segment_id = body.get("segment")
        plane_doc = body.get("plane") or {}
        try:
            plane = CutPlane.from_point_normal(
                [float(x) for x in plane_doc["point"]],
                [float(x) for x in plane_doc["normal"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            return JSONResponse(status_code=400,
                                content={"error": "BadRequest", "detail": f"plane: {exc}"})
        with session.lock:
            seg = session.scene.segment(segment_id)
            if seg is None:
                return JSONResponse(status_code=404, content={
                    "error": "UnknownSegment", "detail": str(segment_id)})
            parts = slice_by_plane(seg.mesh, plane, id_base=segment_id)
            version = session.mutate(session.scene.replace_segment(
                segment_id,
                [SceneSegment(s.segment_id, s.mesh, s.label) for s in parts.segments],
            ))
        return {"segments": parts.ids(), "scene_version": version}

    @app.post("/segment")
    def post_segment_auto(body: dict):
        with session.lock:
            segment_id = body.get("segment")
            if segment_id is None:
                if len(session.scene.segments) != 1:
                    return JSONResponse(status_code=400, content={
                        "error": "BadRequest",
                        "detail": "scene has several segments; pass 'segment'"})
                target = session.scene.segments[0]
            else:
                target = session.scene.segment(segment_id)
                if target is None:
                    return JSONResponse(status_code=404, content={
                        "error": "UnknownSegment", "detail": str(segment_id)})
            result = segment_auto(
                target.mesh,
                delta=float(body.get("delta", 0.5)),
                k=body.get("k"),
                seed=int(body.get("seed", 42)),
                k_max=int(body.get("k_max", 10)),
            )
            parts = segments_from_labels(target.mesh, result, id_base=target.segment_id)
            version = session.mutate(session.scene.replace_segment(
                target.segment_id,
                [SceneSegment(s.segment_id, s.mesh, s.label) for s in parts.segments],
            ))
        return {"k": result.k, "method": result.method,
                "segments": parts.ids(), "scene_version": version}

    @app.post("/joints")
    def post_joint(body: dict):
        with session.lock:
            scene = session.scene
            try:
                joint_type = JointType(body.get("type"))
            except ValueError:
                return JSONResponse(status_code=400, content={
                    "error": "BadRequest", "detail": f"unknown joint type {body.get('type')!r}"})
            base_id, movable_id = body.get("base"), body.get("movable")
            if body.get("auto_frame"):
                base = scene.segment(base_id)
                movable = scene.segment(movable_id)
                if base is None or movable is None:
                    return JSONResponse(status_code=404, content={
                        "error": "UnknownSegment", "detail": "base/movable not in scene"})
                anchor, axes = infer_joint_frame(base.mesh, movable.mesh)
                axes = frame_for_type(joint_type, axes)
            else:
                try:
                    anchor = np.array([float(x) for x in body["anchor"]])
                    axes = np.array([[float(x) for x in row] for row in body["axes"]])
                except (KeyError, TypeError, ValueError) as exc:
                    return JSONResponse(status_code=400, content={
                        "error": "BadRequest", "detail": f"anchor/axes: {exc}"})
            joint_id = body.get("id") or f"j{len(scene.joints)}"
            try:
                spec = JointSpec(
                    joint_id=joint_id, joint_type=joint_type,
                    base=base_id, movable=movable_id,
                    anchor=anchor, axes=axes,
                    resistance=body.get("resistance", "medium"),
                )
            except ValueError as exc:
                return JSONResponse(status_code=400,
                                    content={"error": "BadRequest", "detail": str(exc)})
            version = session.mutate(attach_joint(scene, spec))
        return {"joint": joint_id, "anchor": [float(x) for x in spec.anchor],
                "scene_version": version}

    @app.post("/widgets")
    def post_widget(body: dict):
        with session.lock:
            placement_doc = body.get("placement") or {}
            placement = Placement(
                position=tuple(placement_doc.get("position", (0.0, 0.0, 0.0))),
                orientation=tuple(placement_doc.get("orientation", (1.0, 0.0, 0.0, 0.0))),
                scale=float(placement_doc.get("scale", 1.0)),
            )
            scene, widget_id = spawn_widget(
                session.scene,
                category=body.get("category", ""),
                segment_id=body.get("segment", ""),
                subtype=body.get("subtype"),
                placement=placement,
                binding=body.get("binding"),
                detents=body.get("detents"),
            )
            version = session.mutate(scene)
        return {"widget": widget_id, "scene_version": version}

    @app.patch("/widgets/{widget_id}")
    def patch_widget(widget_id: str, body: dict):
        with session.lock:
            scene = session.scene
            if "segment" in body:
                scene = attach_widget(scene, widget_id, body["segment"])
            if "visible" in body:
                scene = set_visibility(scene, widget_id, bool(body["visible"]))
            version = session.mutate(scene)
        return {"widget": widget_id, "scene_version": version}

    @app.post("/content")
    async def post_content(file: UploadFile = File(...), kind: str = Form(None),
                           annotation: str = Form(None)):
        suffix = os.path.splitext(file.filename or "upload")[1]
        with tempfile.NamedTemporaryFile(suffix=suffix, delete=False) as tmp:
            tmp.write(await file.read())
            tmp_path = tmp.name
        try:
            with session.lock:
                store = ContentStore(session.content_dir)
                item = store.import_file(
                    tmp_path, kind_hint=kind,
                    existing_ids=[c.content_id for c in session.scene.contents],
                    annotation=annotation,
                )
                item = dataclasses_replace_filename(item, file.filename)
                version = session.mutate(session.scene.add_content(item))
        finally:
            os.unlink(tmp_path)
        return {"content": item.content_id, "kind": item.kind,
                "checksum": item.checksum, "scene_version": version}

    @app.post("/bindings")
    def post_binding(body: dict):
        with session.lock:
            scene = bind_content(
                session.scene,
                content_id=body.get("content", ""),
                target_kind=body.get("target_kind", "scene"),
                target_id=body.get("target_id", ""),
                role=body.get("role", "playback-source"),
            )
            version = session.mutate(scene)
        return {"scene_version": version}

    @app.post("/undo")
    def post_undo():
        with session.lock:
            if not session.undo_stack:
                return JSONResponse(status_code=400, content={
                    "error": "NothingToUndo", "detail": "undo stack empty"})
            session.scene = session.undo_stack.pop()
            session.version += 1
            return {"scene_version": session.version}

    @app.post("/save")
    def post_save(body: dict | None = None):
        path = (body or {}).get("path") or session.scene_path
        if not path:
            return JSONResponse(status_code=400, content={
                "error": "BadRequest", "detail": "no path bound to this session"})
        save_scene(session.scene, path)
        session.scene_path = path
        return {"path": path, "scene_version": session.version}

    @app.post("/validate")
    def post_validate():
        return {"violations": validate_scene(session.scene)}

    # ------------------------------------------------------------- simulation

    @app.post("/simulate")
    def post_simulate(body: dict):
        with session.lock:
            if session.running is not None and not session.running.done.is_set():
                return JSONResponse(status_code=409, content={
                    "error": "SimulationRunning",
                    "detail": "a simulation is already running for this scene"})
            preview = body.get("preview")
            if preview:
                try:
                    scene = preview_scene(JointType(preview.get("type", "")),
                                          preview.get("resistance", "low"))
                except ValueError as exc:
                    return JSONResponse(status_code=400, content={
                        "error": "BadRequest", "detail": str(exc)})
            else:
                scene = session.scene
            try:
                entries = tuple(parse_event(doc) for doc in body.get("script", []))
                script = EventScript(
                    entries=entries, duration=float(body.get("duration", 1.0))
                )
            except (IdiError, TypeError, ValueError) as exc:
                if isinstance(exc, IdiError):
                    raise
                return JSONResponse(status_code=400, content={
                    "error": "BadRequest", "detail": str(exc)})
            stride = int(body.get("frame_stride", 4))

            sim = SimulationRun(thread=None)  # type: ignore[arg-type]

            def worker():
                def push_frame(st, pb, fx):
                    sim.frames.append(_frame_document(st, pb, fx))
                    # brief GIL yield so the event loop can accept stream
                    # connections while the simulation computes
                    import time as _time

                    _time.sleep(0.0003)

                try:
                    # full trajectory is always recorded server-side,
                    # whatever the streaming rate
                    run_dir = tempfile.mkdtemp(prefix="idi-run-")
                    report = run(
                        scene, script, keep_history=False, out_dir=run_dir,
                        frame_callback=push_frame,
                        frame_stride=stride,
                    )
                    doc = {
                        "steps": report.steps,
                        "dt": report.dt,
                        "duration": report.duration,
                        "effects": [
                            {"action": e.action, "content": e.content,
                             "parameter": e.parameter, "widget": e.widget, "time": e.time}
                            for e in report.effects
                        ],
                        "event_log": report.event_log,
                        "energy_final": float(report.energy[-1]) if len(report.energy) else 0.0,
                        "wall_clock_s": report.runtime_s,
                        "trajectory_path": report.trajectory_path,
                        "effects_path": report.effects_path,
                    }
                    sim.report_doc = doc
                    session.last_report = doc
                except Exception as exc:  # propagate into the summary frame
                    sim.error = f"{getattr(exc, 'code', type(exc).__name__)}: {exc}"
                finally:
                    sim.frames.append({"type": "summary", "error": sim.error,
                                       "report": sim.report_doc})
                    sim.done.set()

            sim.thread = threading.Thread(target=worker, daemon=True)
            session.running = sim
            sim.thread.start()
        return {"started": True, "frame_stride": stride}

    @app.websocket("/simulate/stream")
    async def simulate_stream(ws: WebSocket):
        await ws.accept()
        sim = session.running
        if sim is None:
            await ws.send_text(json.dumps({"type": "summary", "error": "NoSimulation",
                                           "report": None}))
            await ws.close()
            return
        sent = 0
        try:
            while True:
                while sent < len(sim.frames):
                    await ws.send_text(json.dumps(sim.frames[sent], sort_keys=True))
                    sent += 1
                if sim.done.is_set() and sent >= len(sim.frames):
                    break
                await asyncio.sleep(0.005)
            await ws.close()
        except WebSocketDisconnect:
            pass  # client gone; the simulation keeps running

    # optional static frontend (built separately)
    ui_dir = os.environ.get("IDI_UI_DIR") or os.path.join(
        os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
        "frontend", "dist",
    )
    if os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def dataclasses_replace_filename(item, filename):
    if not filename:
        return item
    import dataclasses

    return dataclasses.replace(item, filename=os.path.basename(filename))
