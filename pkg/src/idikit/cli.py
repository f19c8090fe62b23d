"""`idi` command line: the full authoring pipeline, headless.

Exit codes: 0 success, 1 domain error (validation, unknown ids, geometry),
2 usage or file errors. `--json` prints machine-readable results on
stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .content import ContentStore, bind_content
from .demo import write_demo_assets
from .errors import IdiError
from .harness import EventScript, run
from .mesh import import_mesh
from .physics import JointSpec, JointType, attach_joint, frame_for_type, infer_joint_frame
from .scene import IdiScene, SceneSegment, load_scene, save_scene, validate_scene
from .slicer import CutPlane, slice_by_plane
from .spectral import segment_auto, segments_from_labels
from .widgets import Placement, attach_widget, set_visibility, spawn_widget


def _plane_arg(text: str) -> CutPlane:
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError(
            "plane must be px,py,pz,nx,ny,nz (6 comma-separated numbers)"
        )
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad plane value in {text!r}") from None
    try:
        return CutPlane.from_point_normal(values[:3], values[3:])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _vec3_arg(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def _axes_arg(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 9:
        raise argparse.ArgumentTypeError("expected 9 numbers: ax,ay,az,bx,by,bz,cx,cy,cz")
    try:
        return np.array([float(p) for p in parts]).reshape(3, 3)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _load(path) -> IdiScene:
    return load_scene(path)


def _save(scene, args) -> None:
    out = getattr(args, "output", None) or args.scene
    save_scene(scene, out)


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_import(args) -> int:
    mesh = import_mesh(args.mesh)
    name = args.name or os.path.splitext(os.path.basename(args.mesh))[0]
    scene = IdiScene(name=name, segments=(SceneSegment(name, mesh, "auto-0"),))
    save_scene(scene, args.output)
    _emit(args, {"scene": args.output, "segment": name,
                 "triangles": len(mesh.triangles), "watertight": mesh.watertight},
          f"imported {args.mesh} -> {args.output} ({len(mesh.triangles)} triangles)")
    return 0


def cmd_slice(args) -> int:
    scene = _load(args.scene)
    segment = scene.segment(args.segment)
    if segment is None:
        from .errors import UnknownSegmentError

        raise UnknownSegmentError(f"unknown segment {args.segment!r}")
    parts = slice_by_plane(segment.mesh, args.plane, id_base=args.segment)
    scene = scene.replace_segment(
        args.segment,
        [SceneSegment(s.segment_id, s.mesh, s.label) for s in parts.segments],
    )
    _save(scene, args)
    _emit(args, {"segments": parts.ids()}, "new segments: " + ", ".join(parts.ids()))
    return 0


def cmd_segment(args) -> int:
    scene = _load(args.scene)
    if args.segment:
        target = scene.segment(args.segment)
        if target is None:
            from .errors import UnknownSegmentError

            raise UnknownSegmentError(f"unknown segment {args.segment!r}")
    elif len(scene.segments) == 1:
        target = scene.segments[0]
    else:
        raise IdiError("scene has several segments; pass --segment")
    seg_result = segment_auto(
        target.mesh, delta=args.delta, k=args.k, seed=args.seed, k_max=args.k_max
    )
    parts = segments_from_labels(target.mesh, seg_result, id_base=target.segment_id)
    scene = scene.replace_segment(
        target.segment_id,
        [SceneSegment(s.segment_id, s.mesh, s.label) for s in parts.segments],
    )
    _save(scene, args)
    _emit(args, {"k": seg_result.k, "method": seg_result.method, "segments": parts.ids()},
          f"k={seg_result.k} ({seg_result.method}): " + ", ".join(parts.ids()))
    return 0


def cmd_joint_add(args) -> int:
    scene = _load(args.scene)
    joint_type = JointType(args.type)
    if args.auto_frame:
        base = scene.segment(args.base)
        movable = scene.segment(args.movable)
        if base is None or movable is None:
            from .errors import UnknownSegmentError

            raise UnknownSegmentError("base/movable segment not in scene")
        anchor, axes = infer_joint_frame(base.mesh, movable.mesh)
        axes = frame_for_type(joint_type, axes)
    else:
        if args.anchor is None or args.axes is None:
            raise IdiError("pass --auto-frame or both --anchor and --axes")
        anchor, axes = args.anchor, args.axes
    joint_id = args.id or f"j{len(scene.joints)}"
    spec = JointSpec(
        joint_id=joint_id,
        joint_type=joint_type,
        base=args.base,
        movable=args.movable,
        anchor=anchor,
        axes=axes,
        resistance=args.resistance,
    )
    scene = attach_joint(scene, spec)
    _save(scene, args)
    _emit(args, {"joint": joint_id, "anchor": [float(x) for x in anchor]},
          f"joint {joint_id} ({args.type}) {args.base} -> {args.movable}")
    return 0


def cmd_widget_add(args) -> int:
    scene = _load(args.scene)
    placement = Placement(position=tuple(args.position) if args.position is not None else (0.0, 0.0, 0.0))
    scene, widget_id = spawn_widget(
        scene, args.category, args.segment, subtype=args.subtype,
        placement=placement, binding=args.binding, detents=args.detents,
    )
    _save(scene, args)
    _emit(args, {"widget": widget_id}, f"widget {widget_id} ({args.category}) on {args.segment}")
    return 0


def cmd_widget_attach(args) -> int:
    scene = _load(args.scene)
    scene = attach_widget(scene, args.widget, args.segment)
    _save(scene, args)
    _emit(args, {"widget": args.widget, "segment": args.segment},
          f"widget {args.widget} attached to {args.segment}")
    return 0


def cmd_widget_visibility(args, visible: bool) -> int:
    scene = _load(args.scene)
    scene = set_visibility(scene, args.widget, visible)
    _save(scene, args)
    _emit(args, {"widget": args.widget, "visible": visible},
          f"widget {args.widget} {'shown' if visible else 'hidden'}")
    return 0


def cmd_content_import(args) -> int:
    scene = _load(args.scene)
    root = os.path.dirname(os.path.abspath(args.scene))
    store = ContentStore(os.path.join(root, "content"))
    item = store.import_file(
        args.file, kind_hint=args.kind,
        existing_ids=[c.content_id for c in scene.contents],
        annotation=args.annotation,
    )
    scene = scene.add_content(item)
    _save(scene, args)
    _emit(args, {"content": item.content_id, "kind": item.kind, "checksum": item.checksum},
          f"content {item.content_id} ({item.kind}) checksum {item.checksum[:12]}...")
    return 0


def cmd_content_bind(args) -> int:
    scene = _load(args.scene)
    if args.target == "scene":
        kind, target_id = "scene", ""
    elif ":" in args.target:
        kind, target_id = args.target.split(":", 1)
    else:
        raise IdiError("target must be 'scene', 'segment:ID' or 'widget:ID'")
    scene = bind_content(scene, args.content, kind, target_id, role=args.role)
    _save(scene, args)
    _emit(args, {"content": args.content, "target": args.target, "role": args.role},
          f"bound {args.content} to {args.target} as {args.role}")
    return 0


def cmd_simulate(args) -> int:
    scene = _load(args.scene)
    script = EventScript.from_jsonl(args.script, duration=args.duration)
    report = run(scene, script, out_dir=args.output, keep_history=False)
    _emit(
        args,
        {
            "steps": report.steps,
            "effects": [e.brief() for e in report.effects],
            "trajectory": report.trajectory_path,
            "report": report.report_path,
        },
        f"{report.steps} steps, effects: {report.effect_briefs()}",
    )
    return 0


def cmd_validate(args) -> int:
    scene = _load(args.scene)
    violations = validate_scene(scene)
    if violations:
        for violation in violations:
            print(violation, file=sys.stderr)
        return 1
    _emit(args, {"valid": True, "segments": len(scene.segments)}, "scene valid")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(scene_path=args.scene)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def cmd_demo(args) -> int:
    assets = write_demo_assets(args.output)
    _emit(args, assets, f"demo assets in {args.output}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idi", description=__doc__)
    parser.add_argument("--json", action="store_true", help="machine-readable stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="import a mesh into a fresh scene")
    p.add_argument("mesh")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--name")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("slice", help="cut a segment along a plane")
    p.add_argument("scene")
    p.add_argument("--segment", required=True)
    p.add_argument("--plane", required=True, type=_plane_arg)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("segment", help="automatic spectral segmentation")
    p.add_argument("scene")
    p.add_argument("--segment")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--auto", action="store_true", help="pick k by eigengap (default)")
    group.add_argument("--k", type=int)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("joint", help="joint operations")
    joint_sub = p.add_subparsers(dest="joint_command", required=True)
    pa = joint_sub.add_parser("add")
    pa.add_argument("scene")
    pa.add_argument("--type", required=True, choices=[t.value for t in JointType])
    pa.add_argument("--base", required=True)
    pa.add_argument("--movable", required=True)
    pa.add_argument("--resistance", default="medium", choices=["low", "medium", "high"])
    pa.add_argument("--auto-frame", action="store_true")
    pa.add_argument("--anchor", type=_vec3_arg)
    pa.add_argument("--axes", type=_axes_arg)
    pa.add_argument("--id")
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=cmd_joint_add)

    p = sub.add_parser("widget", help="widget operations")
    widget_sub = p.add_subparsers(dest="widget_command", required=True)
    pa = widget_sub.add_parser("add")
    pa.add_argument("scene")
    pa.add_argument("--category", required=True, choices=["knob", "screen", "slider", "button"])
    pa.add_argument("--segment", required=True)
    pa.add_argument("--subtype")
    pa.add_argument("--binding")
    pa.add_argument("--detents", type=int)
    pa.add_argument("--position", type=_vec3_arg)
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=cmd_widget_add)
    pa = widget_sub.add_parser("attach")
    pa.add_argument("scene")
    pa.add_argument("--widget", required=True)
    pa.add_argument("--segment", required=True)
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=cmd_widget_attach)
    pa = widget_sub.add_parser("hide")
    pa.add_argument("scene")
    pa.add_argument("--widget", required=True)
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=lambda a: cmd_widget_visibility(a, False))
    pa = widget_sub.add_parser("show")
    pa.add_argument("scene")
    pa.add_argument("--widget", required=True)
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=lambda a: cmd_widget_visibility(a, True))

    p = sub.add_parser("content", help="embedded content operations")
    content_sub = p.add_subparsers(dest="content_command", required=True)
    pa = content_sub.add_parser("import")
    pa.add_argument("scene")
    pa.add_argument("file")
    pa.add_argument("--kind", choices=["audio", "video", "picture", "text"])
    pa.add_argument("--annotation")
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=cmd_content_import)
    pa = content_sub.add_parser("bind")
    pa.add_argument("scene")
    pa.add_argument("--content", required=True)
    pa.add_argument("--target", required=True, help="scene | segment:ID | widget:ID")
    pa.add_argument("--role", default="playback-source", choices=["playback-source", "annotation"])
    pa.add_argument("-o", "--output")
    pa.set_defaults(func=cmd_content_bind)

    p = sub.add_parser("simulate", help="run a scripted replay")
    p.add_argument("scene")
    p.add_argument("--script", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--duration", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="validate a scene file")
    p.add_argument("scene")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the local authoring service")
    p.add_argument("--port", type=int, default=7311)
    p.add_argument("--scene", help="scene file to load into the session")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("demo", help="write the bundled TV demo assets")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IdiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
