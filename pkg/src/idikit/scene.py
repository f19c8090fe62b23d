"""The persisted scene: segments, joints, widgets, bindings, sim config.

On disk a scene is a canonical-JSON ``<name>.idi.json`` (sorted keys,
shortest-round-trip floats, byte-stable) referencing segment meshes under
``meshes/`` by relative path + sha256 and the content catalog under
``content/``. Loading verifies checksums and cross-references; malformed
input raises, never crashes.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .content import ContentBinding, ContentItem, ContentStore
from .errors import (
    ChecksumMismatchError,
    SceneParseError,
    UnknownVersionError,
    ValidationFailureError,
)
from .mesh import TriMesh, export_mesh, import_mesh
from .content import file_checksum
from .physics import JointSpec, JointType
from .widgets import Placement, WidgetSpec

FORMAT_VERSION = "1.0"


@dataclass(frozen=True)
class SceneSegment:
    segment_id: str
    mesh: TriMesh
    label: str = "auto-0"


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1.0 / 120.0
    gravity: tuple[float, float, float] = (0.0, -9.81, 0.0)
    ground_plane: bool = False
    seed: int = 42


@dataclass(frozen=True)
class IdiScene:
    name: str = "scene"
    version: str = FORMAT_VERSION
    segments: tuple[SceneSegment, ...] = ()
    joints: tuple[JointSpec, ...] = ()
    widgets: tuple[WidgetSpec, ...] = ()
    bindings: tuple[ContentBinding, ...] = ()
    contents: tuple[ContentItem, ...] = ()
    sim: SimConfig = field(default_factory=SimConfig)

    # -- lookups ----------------------------------------------------------
    def segment(self, segment_id: str) -> SceneSegment | None:
        return next((s for s in self.segments if s.segment_id == segment_id), None)

    def widget(self, widget_id: str) -> WidgetSpec | None:
        return next((w for w in self.widgets if w.widget_id == widget_id), None)

    def joint(self, joint_id: str) -> JointSpec | None:
        return next((j for j in self.joints if j.joint_id == joint_id), None)

    def content(self, content_id: str) -> ContentItem | None:
        return next((c for c in self.contents if c.content_id == content_id), None)

    # -- structural edits --------------------------------------------------
    def with_segments(self, segments) -> "IdiScene":
        return dataclasses.replace(self, segments=tuple(segments))

    def add_segment(self, segment: SceneSegment) -> "IdiScene":
        return self.with_segments(self.segments + (segment,))

    def add_content(self, item: ContentItem) -> "IdiScene":
        return dataclasses.replace(self, contents=self.contents + (item,))

    def replace_segment(self, segment_id: str, new_segments) -> "IdiScene":
        """Swap one segment for several (slicing / auto-segmentation);
        joints, widgets and bindings referencing the removed segment are
        dropped to keep referential integrity."""
        kept = [s for s in self.segments if s.segment_id != segment_id]
        joints = tuple(
            j for j in self.joints if segment_id not in (j.base, j.movable)
        )
        widgets = tuple(w for w in self.widgets if w.segment != segment_id)
        kept_widget_ids = {w.widget_id for w in widgets}
        bindings = tuple(
            b for b in self.bindings
            if not (b.target_kind == "segment" and b.target_id == segment_id)
            and not (b.target_kind == "widget" and b.target_id not in kept_widget_ids)
        )
        return dataclasses.replace(
            self,
            segments=tuple(kept) + tuple(new_segments),
            joints=joints,
            widgets=widgets,
            bindings=bindings,
        )


def validate_scene(scene: IdiScene) -> list[str]:
    """Cross-reference and uniqueness checks; returns human-readable
    violations (empty when the scene is valid)."""
    violations: list[str] = []
    if scene.version != FORMAT_VERSION:
        violations.append(f"unknown format version {scene.version!r}")

    for kind, ids in (
        ("segment", [s.segment_id for s in scene.segments]),
        ("joint", [j.joint_id for j in scene.joints]),
        ("widget", [w.widget_id for w in scene.widgets]),
        ("content", [c.content_id for c in scene.contents]),
    ):
        seen = set()
        for i in ids:
            if i in seen:
                violations.append(f"duplicate {kind} id {i!r}")
            seen.add(i)

    segment_ids = {s.segment_id for s in scene.segments}
    widget_ids = {w.widget_id for w in scene.widgets}
    content_ids = {c.content_id for c in scene.contents}

    for j in scene.joints:
        for sid in (j.base, j.movable):
            if sid not in segment_ids:
                violations.append(f"joint {j.joint_id!r} references missing segment {sid!r}")
    for w in scene.widgets:
        if w.segment not in segment_ids:
            violations.append(f"widget {w.widget_id!r} references missing segment {w.segment!r}")
    for b in scene.bindings:
        if b.content not in content_ids:
            violations.append(f"binding references missing content {b.content!r}")
        if b.target_kind == "segment" and b.target_id not in segment_ids:
            violations.append(f"binding references missing segment {b.target_id!r}")
        if b.target_kind == "widget" and b.target_id not in widget_ids:
            violations.append(f"binding references missing widget {b.target_id!r}")
    return violations


# ---------------------------------------------------------------------------
# canonical (de)serialization


def _float_list(arr):
    return [float(x) for x in np.asarray(arr).reshape(-1)]


def scene_document(scene: IdiScene, mesh_records=None) -> dict:
    """Plain-JSON document for a scene. ``mesh_records`` maps segment id to
    (relative path, checksum); omitted entries serialize with empty mesh
    references (for in-memory previews)."""
    mesh_records = mesh_records or {}
    return {
        "version": scene.version,
        "name": scene.name,
        "segments": [
            {
                "id": s.segment_id,
                "label": s.label,
                "mesh_path": mesh_records.get(s.segment_id, ("", ""))[0],
                "checksum": mesh_records.get(s.segment_id, ("", ""))[1],
            }
            for s in scene.segments
        ],
        "joints": [
            {
                "id": j.joint_id,
                "type": j.joint_type.value,
                "base": j.base,
                "movable": j.movable,
                "anchor": _float_list(j.anchor),
                "axes": [_float_list(row) for row in j.axes],
                "resistance": j.resistance,
                "limits": {str(k): [float(v[0]), float(v[1])] for k, v in (j.limits or {}).items()},
            }
            for j in scene.joints
        ],
        "widgets": [
            {
                "id": w.widget_id,
                "category": w.category,
                "subtype": w.subtype,
                "segment": w.segment,
                "placement": {
                    "position": _float_list(w.placement.position),
                    "orientation": _float_list(w.placement.orientation),
                    "scale": float(w.placement.scale),
                },
                "visible": w.visible,
                "binding": w.binding,
                "detents": w.detents,
            }
            for w in scene.widgets
        ],
        "bindings": [
            {
                "content": b.content,
                "target_kind": b.target_kind,
                "target_id": b.target_id,
                "role": b.role,
            }
            for b in scene.bindings
        ],
        "sim": {
            "dt": float(scene.sim.dt),
            "gravity": _float_list(scene.sim.gravity),
            "ground_plane": bool(scene.sim.ground_plane),
            "seed": int(scene.sim.seed),
        },
    }


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_scene(scene: IdiScene, path) -> None:
    """Validate and write the scene: meshes to ``meshes/<id>.obj``, content
    catalog to ``content/index.json``, canonical JSON to ``path``. Repeated
    saves of equal scenes are byte-identical; writes are atomic."""
    violations = validate_scene(scene)
    if violations:
        raise ValidationFailureError(violations)

    path = os.fspath(path)
    root = os.path.dirname(os.path.abspath(path))
    mesh_dir = os.path.join(root, "meshes")
    os.makedirs(mesh_dir, exist_ok=True)

    mesh_records = {}
    for seg in scene.segments:
        rel = os.path.join("meshes", f"{seg.segment_id}.obj")
        export_mesh(seg.mesh, os.path.join(root, rel))
        mesh_records[seg.segment_id] = (rel, file_checksum(os.path.join(root, rel)))

    store = ContentStore(os.path.join(root, "content"))
    if scene.contents:
        store.save_index(scene.contents)

    text = canonical_json(scene_document(scene, mesh_records))
    fd, tmp = tempfile.mkstemp(dir=root, suffix=".idi.tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(doc, key, types, where) -> object:
    if not isinstance(doc, dict) or key not in doc:
        raise SceneParseError(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, types):
        raise SceneParseError(f"{where}: field {key!r} has wrong type")
    return value


def _vec(value, n, where) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        raise SceneParseError(f"{where}: expected a {n}-vector")
    return np.array(value, dtype=np.float64)


def load_scene(path) -> IdiScene:
    """Parse, checksum-verify, and validate a scene file."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    root = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SceneParseError(f"invalid scene JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SceneParseError("scene document must be a JSON object")

    version = _require(doc, "version", str, "scene")
    if version != FORMAT_VERSION:
        raise UnknownVersionError(f"unsupported scene version {version!r}")
    name = _require(doc, "name", str, "scene")

    segments = []
    for entry in _require(doc, "segments", list, "scene"):
        sid = _require(entry, "id", str, "segment")
        label = _require(entry, "label", str, f"segment {sid}")
        rel = _require(entry, "mesh_path", str, f"segment {sid}")
        checksum = _require(entry, "checksum", str, f"segment {sid}")
        mesh_file = os.path.join(root, rel)
        try:
            is_file = os.path.isfile(mesh_file)
        except ValueError:
            is_file = False
        if not rel or not is_file:
            raise SceneParseError(f"segment {sid}: mesh file {rel!r} missing")
        actual = file_checksum(mesh_file)
        if actual != checksum:
            raise ChecksumMismatchError(
                f"segment {sid}: mesh file {rel!r} checksum mismatch"
            )
        segments.append(SceneSegment(sid, import_mesh(mesh_file), label))

    joints = []
    for entry in _require(doc, "joints", list, "scene"):
        jid = _require(entry, "id", str, "joint")
        type_name = _require(entry, "type", str, f"joint {jid}")
        try:
            joint_type = JointType(type_name)
        except ValueError:
            raise SceneParseError(f"joint {jid}: unknown type {type_name!r}") from None
        axes_raw = _require(entry, "axes", list, f"joint {jid}")
        if len(axes_raw) != 3:
            raise SceneParseError(f"joint {jid}: axes must be 3 rows")
        limits_raw = entry.get("limits") or {}
        if not isinstance(limits_raw, dict):
            raise SceneParseError(f"joint {jid}: limits must be an object")
        try:
            limits = {
                int(k): (float(v[0]), float(v[1])) for k, v in limits_raw.items()
            } or None
            joints.append(
                JointSpec(
                    joint_id=jid,
                    joint_type=joint_type,
                    base=_require(entry, "base", str, f"joint {jid}"),
                    movable=_require(entry, "movable", str, f"joint {jid}"),
                    anchor=_vec(entry.get("anchor"), 3, f"joint {jid}"),
                    axes=np.array([_vec(r, 3, f"joint {jid} axes") for r in axes_raw]),
                    resistance=_require(entry, "resistance", str, f"joint {jid}"),
                    limits=limits,
                )
            )
        except (ValueError, TypeError, IndexError, KeyError) as exc:
            raise SceneParseError(f"joint {jid}: {exc}") from None

    widgets = []
    for entry in _require(doc, "widgets", list, "scene"):
        wid = _require(entry, "id", str, "widget")
        placement_raw = _require(entry, "placement", dict, f"widget {wid}")
        try:
            placement = Placement(
                position=tuple(_vec(placement_raw.get("position"), 3, f"widget {wid}")),
                orientation=tuple(_vec(placement_raw.get("orientation"), 4, f"widget {wid}")),
                scale=float(placement_raw.get("scale", 1.0)),
            )
            widgets.append(
                WidgetSpec(
                    widget_id=wid,
                    category=_require(entry, "category", str, f"widget {wid}"),
                    segment=_require(entry, "segment", str, f"widget {wid}"),
                    subtype=entry.get("subtype"),
                    placement=placement,
                    visible=bool(_require(entry, "visible", bool, f"widget {wid}")),
                    binding=entry.get("binding"),
                    detents=entry.get("detents"),
                )
            )
        except (ValueError, TypeError) as exc:
            raise SceneParseError(f"widget {wid}: {exc}") from None

    bindings = []
    for entry in _require(doc, "bindings", list, "scene"):
        try:
            bindings.append(
                ContentBinding(
                    content=_require(entry, "content", str, "binding"),
                    target_kind=_require(entry, "target_kind", str, "binding"),
                    target_id=_require(entry, "target_id", str, "binding"),
                    role=_require(entry, "role", str, "binding"),
                )
            )
        except ValueError as exc:
            raise SceneParseError(f"binding: {exc}") from None

    sim_raw = _require(doc, "sim", dict, "scene")
    try:
        sim = SimConfig(
            dt=float(sim_raw["dt"]),
            gravity=tuple(_vec(sim_raw.get("gravity"), 3, "sim")),
            ground_plane=bool(sim_raw["ground_plane"]),
            seed=int(sim_raw["seed"]),
        )
        if sim.dt <= 0:
            raise ValueError("sim.dt must be positive")
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneParseError(f"sim config: {exc}") from None

    contents = tuple(ContentStore(os.path.join(root, "content")).load_index())

    scene = IdiScene(
        name=name,
        version=version,
        segments=tuple(segments),
        joints=tuple(joints),
        widgets=tuple(widgets),
        bindings=tuple(bindings),
        contents=contents,
        sim=sim,
    )
    violations = validate_scene(scene)
    if violations:
        raise ValidationFailureError(violations)
    return scene
