import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from idikit.mesh import export_mesh
from idikit.primitives import unit_cube
from idikit.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def cube_client(client, tmp_path):
    path = tmp_path / "cube.obj"
    export_mesh(unit_cube(), path)
    with open(path, "rb") as fh:
        response = client.post("/segments", files={"file": ("cube.obj", fh)},
                               data={"name": "cube"})
    assert response.status_code == 200
    return client


def slice_cube(client, segment="cube", z=0.5):
    return client.post("/slice", json={
        "segment": segment,
        "plane": {"point": [0.5, 0.5, z], "normal": [0, 0, 1]},
    })


class TestSceneEndpoints:
    def test_fresh_scene(self, client):
        response = client.get("/scene")
        assert response.status_code == 200
        doc = response.json()
        assert doc["scene"]["version"] == "1.0"
        assert doc["scene"]["segments"] == []
        assert doc["scene_version"] == 0

    def test_version_counter_strictly_increases(self, cube_client):
        versions = []
        versions.append(slice_cube(cube_client).json()["scene_version"])
        response = cube_client.post("/widgets",
                                    json={"category": "knob", "segment": "cube.pos"})
        versions.append(response.json()["scene_version"])
        assert versions == sorted(versions)
        assert len(set(versions)) == len(versions)

    def test_segment_mesh_fetch(self, cube_client):
        response = cube_client.get("/segments/cube/mesh")
        assert response.status_code == 200
        mesh = response.json()["mesh"]
        assert len(mesh["vertices"]) == 8
        assert len(mesh["triangles"]) == 12
        assert cube_client.get("/segments/ghost/mesh").status_code == 404


class TestErrorMapping:
    def test_no_intersection_is_400(self, cube_client):
        response = slice_cube(cube_client, z=5.0)
        assert response.status_code == 400
        assert response.json()["error"] == "NoIntersection"

    def test_unknown_segment_is_404(self, cube_client):
        response = slice_cube(cube_client, segment="ghost")
        assert response.status_code == 404
        assert response.json()["error"] == "UnknownSegment"

    def test_unknown_widget_patch_is_404(self, cube_client):
        response = cube_client.patch("/widgets/w9", json={"visible": False})
        assert response.status_code == 404

    def test_simulate_conflict_is_409(self, cube_client):
        # jointed preview scene: slow enough that the run is still going
        # when the second request lands
        first = cube_client.post("/simulate", json={
            "duration": 120.0, "script": [],
            "preview": {"type": "ball_and_socket"}})
        assert first.status_code == 200
        second = cube_client.post("/simulate", json={"duration": 0.1, "script": []})
        assert second.status_code == 409
        # drain the long run so later tests see a free slot
        session = cube_client.app.state.session
        session.running.done.wait(timeout=120)


class TestMutationsAndUndo:
    def test_undo_restores_exact_scene(self, cube_client):
        before = cube_client.get("/scene").json()["scene"]
        assert slice_cube(cube_client).status_code == 200
        mutated = cube_client.get("/scene").json()["scene"]
        assert mutated != before
        assert cube_client.post("/undo").status_code == 200
        after = cube_client.get("/scene").json()["scene"]
        assert after == before

    def test_undo_empty_stack_is_400(self, client):
        assert client.post("/undo").status_code == 400

    def test_widget_visibility_roundtrip(self, cube_client):
        response = cube_client.post("/widgets",
                                    json={"category": "button", "segment": "cube"})
        wid = response.json()["widget"]
        assert cube_client.patch(f"/widgets/{wid}",
                                 json={"visible": False}).status_code == 200
        doc = cube_client.get("/scene").json()["scene"]
        widget = next(w for w in doc["widgets"] if w["id"] == wid)
        assert widget["visible"] is False

    def test_content_upload_and_bind(self, cube_client):
        response = cube_client.post(
            "/content",
            files={"file": ("song.mp3", b"ID3 stub bytes")},
        )
        assert response.status_code == 200
        cid = response.json()["content"]
        assert response.json()["kind"] == "audio"
        response = cube_client.post("/bindings", json={
            "content": cid, "target_kind": "scene", "target_id": "",
            "role": "playback-source"})
        assert response.status_code == 200
        response = cube_client.post("/bindings", json={
            "content": "ghost", "target_kind": "scene", "target_id": "",
            "role": "playback-source"})
        assert response.status_code == 404

    def test_service_equals_library(self, cube_client):
        """Oracle: the service result matches a direct core-library call."""
        from idikit.slicer import CutPlane, slice_by_plane

        direct = slice_by_plane(unit_cube(),
                                CutPlane.from_point_normal([0.5, 0.5, 0.5], [0, 0, 1]),
                                id_base="cube")
        assert slice_cube(cube_client).json()["segments"] == direct.ids()
        served = cube_client.get("/segments/cube.pos/mesh").json()["mesh"]
        assert np.allclose(np.array(served["vertices"]), direct.segments[0].mesh.vertices)

    def test_joint_preview_parameters(self, client):
        response = client.get("/joints/preview/hinge")
        assert response.status_code == 200
        doc = response.json()
        assert doc["cube_size"] == pytest.approx(0.1)
        assert doc["free_rotation_axes"] == [0]
        assert client.get("/joints/preview/nonsense").status_code == 404

    def test_auto_frame_joint(self, cube_client):
        slice_cube(cube_client)
        response = cube_client.post("/joints", json={
            "type": "ball_and_socket", "base": "cube.neg", "movable": "cube.pos",
            "auto_frame": True})
        assert response.status_code == 200
        doc = cube_client.get("/scene").json()["scene"]
        assert np.allclose(doc["joints"][0]["anchor"], [0.5, 0.5, 0.5], atol=1e-6)


class TestStreaming:
    def test_frame_stream_and_summary(self, cube_client):
        response = cube_client.post("/simulate", json={"duration": 1.0, "script": []})
        assert response.status_code == 200
        frames = []
        with cube_client.websocket_connect("/simulate/stream") as ws:
            while True:
                msg = json.loads(ws.receive_text())
                frames.append(msg)
                if msg.get("type") == "summary":
                    break
        assert frames[-1]["error"] is None
        body = [f for f in frames if f["type"] == "frame"]
        assert len(body) == 30      # 120 steps / stride 4
        steps = [f["step"] for f in body]
        assert steps == sorted(steps) and len(set(steps)) == len(steps)
        assert "cube" in body[0]["poses"]

    def test_preview_simulation_stream(self, client):
        touch = {"type": "touch", "time": 0.05, "center": [0.06, -0.05, 0.0],
                 "velocity": [-0.3, 0.0, 0.0], "radius": 0.01}
        response = client.post("/simulate", json={
            "duration": 0.5, "script": [touch],
            "preview": {"type": "hinge", "resistance": "low"}})
        assert response.status_code == 200
        with client.websocket_connect("/simulate/stream") as ws:
            last = None
            while True:
                msg = json.loads(ws.receive_text())
                if msg.get("type") == "summary":
                    break
                last = msg
        # the movable preview cube actually moved
        assert last is not None
        q = last["poses"]["movable"]["orientation"]
        assert abs(q[0] - 1.0) > 1e-6 or any(abs(x) > 1e-6 for x in q[1:])

    def test_disconnect_does_not_cancel_run(self, cube_client):
        response = cube_client.post("/simulate", json={"duration": 2.0, "script": []})
        assert response.status_code == 200
        with cube_client.websocket_connect("/simulate/stream") as ws:
            ws.receive_text()   # one frame, then drop the connection
        session = cube_client.app.state.session
        assert session.running.done.wait(timeout=60)
        report = cube_client.get("/runs/latest")
        assert report.status_code == 200
        assert report.json()["steps"] == 240

    def test_full_trajectory_recorded_server_side(self, cube_client):
        import os

        assert cube_client.post("/simulate", json={
            "duration": 0.5, "script": [], "frame_stride": 30}).status_code == 200
        session = cube_client.app.state.session
        assert session.running.done.wait(timeout=60)
        report = cube_client.get("/runs/latest").json()
        path = report["trajectory_path"]
        assert path and os.path.exists(path)
        # one row per segment per step regardless of the streaming rate
        rows = open(path).read().strip().splitlines()
        assert len(rows) == 1 + 60 * len(session.scene.segments)

    def test_runs_latest_404_before_any_run(self, client):
        assert client.get("/runs/latest").status_code == 404
