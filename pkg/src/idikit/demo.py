"""Bundled demo assets: a TV with a channel knob, a screen, a play button
and three embedded videos, plus the scripted rotate+press timeline. Used
by the end-to-end tests and as a quickstart for the CLI."""

from __future__ import annotations

import json
import os

from . import primitives
from .mesh import export_mesh

# minimal MP4 container stub: an ftyp box plus a tag byte; playback effects
# are logical so the test videos never need to decode
_MP4_STUB = b"\x00\x00\x00\x18ftypmp42\x00\x00\x00\x00mp42isom"

KNOB_TURN = 2.0943951023931953  # 2*pi/3: detent 1 of 3


def write_demo_assets(out_dir) -> dict:
    """Write tv.obj, three stub videos and events.jsonl; returns paths."""
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    tv_path = os.path.join(out_dir, "tv.obj")
    export_mesh(primitives.box(size=(0.4, 0.3, 0.3), center=(0.0, 0.15, 0.0)), tv_path)

    videos = []
    for i in range(3):
        path = os.path.join(out_dir, f"channel{i}.mp4")
        with open(path, "wb") as fh:
            fh.write(_MP4_STUB + bytes([i]))
        videos.append(path)

    script_path = os.path.join(out_dir, "events.jsonl")
    events = [
        {"type": "widget", "time": 0.1, "widget": "w0", "kind": "rotate", "value": KNOB_TURN},
        {"type": "widget", "time": 0.3, "widget": "w2", "kind": "press", "value": 0.0},
    ]
    with open(script_path, "w", encoding="utf-8", newline="\n") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    return {"mesh": tv_path, "videos": videos, "script": script_path}


def demo_cli_steps(assets: dict, scene_path, out_dir) -> list[list[str]]:
    """The full authoring pipeline as CLI argv lists (import, slice the
    knob region, add widgets, bind videos, simulate)."""
    scene_path = os.fspath(scene_path)
    return [
        ["import", assets["mesh"], "-o", scene_path, "--name", "tv"],
        ["slice", scene_path, "--segment", "tv", "--plane", "0.15,0.15,0,1,0,0"],
        ["widget", "add", scene_path, "--category", "knob", "--segment", "tv.pos"],
        ["widget", "add", scene_path, "--category", "screen", "--segment", "tv.neg"],
        ["widget", "add", scene_path, "--category", "button", "--segment", "tv.neg",
         "--binding", "action:toggle-play"],
        ["content", "import", scene_path, assets["videos"][0]],
        ["content", "import", scene_path, assets["videos"][1]],
        ["content", "import", scene_path, assets["videos"][2]],
        ["content", "bind", scene_path, "--content", "c0", "--target", "scene"],
        ["content", "bind", scene_path, "--content", "c1", "--target", "scene"],
        ["content", "bind", scene_path, "--content", "c2", "--target", "scene"],
        ["simulate", scene_path, "--script", assets["script"], "-o", os.fspath(out_dir),
         "--duration", "1.0"],
    ]
